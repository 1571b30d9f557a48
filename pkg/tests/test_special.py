import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from layerreg.special import erfcx

mpmath.mp.dps = 40


def _ref(x):
    return float(mpmath.exp(mpmath.mpf(x) ** 2) * mpmath.erfc(mpmath.mpf(x)))


@pytest.mark.parametrize("x", [0.0, 1e-8, 0.3, 0.9, 0.90001, 1.7, 4.0, 12.5, 29.99, 30.0, 45.0, 1e3])
def test_erfcx_matches_high_precision(x):
    assert erfcx(x) == pytest.approx(_ref(x), rel=1e-14, abs=0)


@pytest.mark.parametrize("x", [-0.5, -2.0, -5.0])
def test_erfcx_negative_arguments(x):
    assert erfcx(x) == pytest.approx(_ref(x), rel=1e-13)


def test_erfcx_array_and_scalar_forms():
    xs = np.linspace(0, 50, 2001)
    out = erfcx(xs)
    assert out.shape == xs.shape
    assert isinstance(erfcx(0.5), float)
    assert np.allclose(out, special.erfcx(xs), rtol=2e-14, atol=0)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=200.0))
def test_erfcx_against_scipy(x):
    assert erfcx(x) == pytest.approx(special.erfcx(x), rel=5e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.0, max_value=40.0))
def test_erfcx_is_decreasing(x):
    assert erfcx(x + 1e-3) < erfcx(x)
