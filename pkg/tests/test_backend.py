import os
import subprocess
import sys

import numpy as np
import pytest

from layerreg import backend as bk
from layerreg import evaluators as ev
from layerreg import experiments as ex
from layerreg.quadrature import build_quadrature
from layerreg.regularization import RegConfig
from layerreg.surfaces import Ellipsoid

needs_core = pytest.mark.skipif(bk.BACKEND != "cython", reason="compiled core not built")


@pytest.fixture(scope="module")
def setup():
    E = Ellipsoid((1, .6, .4))
    h = 1 / 12
    q = build_quadrature(E, h)
    cfg = RegConfig(p=7, q=5 / 7, kappa0=4)
    T = ev.classify_targets(E, h, h, 0.3, 1)
    on = ev.surface_targets(q, np.arange(0, len(q), 9))
    far = ev.make_targets(E, np.array([[2.5, 0.3, 0.1], [0.0, 3.0, -1.0]]), cfg.delta(h))
    allT = ev.TargetSet(*(np.concatenate([getattr(a, k) for a in (T, on, far)])
                          for k in ("y", "kind", "x0", "b", "n0")))
    return q, cfg, allT


def _field_v(x, n):
    return np.stack([np.sin(x[:, 0]), x[:, 1] * x[:, 2], np.exp(x[:, 2])], axis=1)


def _field_s(x, n):
    return ex.basic_u(x)


@needs_core
def test_backends_agree(setup):
    q, cfg, T = setup
    fs = ev.LayerDensity.from_field(q, _field_s)
    fv = ev.LayerDensity.from_field(q, _field_v)
    for fn, args in [(ev.eval_harmonic_layers, (fs, fs)), (ev.eval_stokes_single, (fv,)),
                     (ev.eval_stokes_double, (fv,)), (ev.eval_pressure, (fv,))]:
        a = fn(q, *args, T, cfg, backend="cython")
        b = fn(q, *args, T, cfg, backend="python")
        for u, v in zip(np.atleast_1d(a) if isinstance(a, tuple) else [a],
                        np.atleast_1d(b) if isinstance(b, tuple) else [b]):
            scale = max(1.0, np.abs(u).max())
            assert np.max(np.abs(np.asarray(u) - np.asarray(v))) <= 1e-12 * scale, fn.__name__


def test_get_unknown_backend():
    with pytest.raises(ImportError):
        bk.get("fortran")
    assert bk.get("python") is bk._fallback


def test_environment_forces_fallback():
    env = dict(os.environ, LAYERREG_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import layerreg; print(layerreg.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_array_helpers():
    a = bk.f64([[1, 2, 3]], 3)
    assert a.dtype == np.float64 and a.flags.c_contiguous
    assert bk.i8([1, 0]).dtype == np.int8
