import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from layerreg import kernels as K
from layerreg import regularization as rg

rng = np.random.default_rng(12)


def _ctx(b=0.03, delta=0.05, p=7, n0=(0.0, 0.0, 1.0)):
    n0 = np.asarray(n0, float) / np.linalg.norm(n0)
    x0 = np.array([0.1, -0.2, 0.3])
    return K.KernelContext(x0 + b * n0, x0, b, n0, delta, p)


def test_laplace_G_values():
    assert float(K.laplace_G([1.0, 0, 0])) == pytest.approx(-1 / (4 * math.pi), rel=1e-15)
    assert float(K.laplace_G([0, 2.0, 0])) == pytest.approx(-1 / (8 * math.pi), rel=1e-15)


def test_laplace_gradG_finite_difference():
    r = np.array([1.0, 0.0, 0.0])
    g = K.laplace_gradG(r)
    assert np.allclose(g, [1 / (4 * math.pi), 0, 0], atol=1e-15)
    e = 1e-5
    fd = [(K.laplace_G(r + e * d) - K.laplace_G(r - e * d)) / (2 * e) for d in np.eye(3)]
    assert np.allclose(g, fd, atol=1e-8)


@pytest.mark.parametrize("fn", [K.laplace_G, K.laplace_gradG])
def test_laplace_singular(fn):
    with pytest.raises(K.SingularKernelError):
        fn(np.zeros(3))


def test_stokeslet_examples():
    assert np.allclose(K.stokeslet([1.0, 0, 0], [0, 0, 0]), np.diag([2.0, 1, 1]), atol=1e-15)
    S = K.stokeslet([0, 0, 2.0], [0, 0, 0])
    assert np.allclose(S, np.diag([0.5, 0.5, 1.0]), atol=1e-15)
    Y, X = rng.normal(size=(100, 3)), rng.normal(size=(100, 3))
    S = K.stokeslet(Y, X)
    assert np.array_equal(S, np.swapaxes(S, -1, -2))
    with pytest.raises(K.SingularKernelError):
        K.stokeslet(np.ones(3), np.ones(3))


def test_stresslet_examples():
    T = K.stresslet([1.0, 0, 0], [0, 0, 0])
    ref = np.zeros((3, 3, 3))
    ref[0, 0, 0] = -6.0
    assert np.allclose(T, ref, atol=1e-15)
    R = rng.normal(size=(50, 3))
    T = K.stresslet(R, 0 * R)
    for perm in [(0, 2, 1), (1, 0, 2), (2, 1, 0), (1, 2, 0)]:
        assert np.allclose(T, np.transpose(T, (0,) + tuple(p + 1 for p in perm)), rtol=1e-14, atol=0)
    assert np.allclose(K.stresslet(2 * R, 0 * R), T / 4, rtol=1e-13, atol=0)
    with pytest.raises(K.SingularKernelError):
        K.stresslet(np.ones(3), np.ones(3))


def _random_split_configs(n, seed=0):
    g = np.random.default_rng(seed)
    n0 = g.normal(size=(n, 3))
    n0 /= np.linalg.norm(n0, axis=1)[:, None]
    x0 = g.normal(size=(n, 3))
    b = g.uniform(-0.3, 0.3, n)
    x = x0 + g.normal(size=(n, 3)) * g.uniform(0.01, 1.0, n)[:, None]
    return n0, x0, b, x


def split_identity_error(n=10000, seed=0, zero_b=False):
    n0, x0, b, x = _random_split_configs(n, seed)
    if zero_b:
        b = 0 * b
    worst = 0.0
    for i in range(n):
        ctx = K.KernelContext(x0[i] + b[i] * n0[i], x0[i], b[i], n0[i], 0.05)
        T1, T2 = K.stresslet_split(ctx, x[i])
        T = K.stresslet(ctx.y, x[i])
        worst = max(worst, np.max(np.abs(T1 + T2 - T)) / np.max(np.abs(T)))
    return worst


def test_split_identity_off_surface():
    assert split_identity_error(2000, 1) <= 1e-12


def test_split_identity_on_surface():
    assert split_identity_error(500, 2, zero_b=True) <= 1e-12


def test_split_denominator_structure():
    ctx = _ctx(b=0.07, n0=(0.3, -0.4, 1.0))
    d = np.array([0.4, 0.1, -0.2])
    d -= np.dot(d, ctx.n0) * ctx.n0
    s = np.linspace(0.5, 1.5, 9)
    xs = ctx.x0 + s[:, None] * d
    T1, T2 = K.stresslet_split(ctx, xs)
    r = np.linalg.norm(ctx.y - xs, axis=1)[:, None, None, None]
    N1 = (T1 * r ** 3).reshape(len(s), -1)
    N2 = (T2 * r ** 5).reshape(len(s), -1)
    # numerators are polynomials in s: degree 1 for T1 (via b-free xh terms), 3 for T2
    for N, deg in ((N1, 1), (N2, 3)):
        c, res, *_ = np.polyfit(s, N, deg, full=True)
        assert np.max(np.abs(np.polyval(c, s[:, None]) - N)) <= 1e-12 * max(1.0, np.abs(N).max())
    # log slopes at small separation: T1 tends to a constant, T2 vanishes like s^2
    small = np.logspace(-4, -3, 5)
    T1s, T2s = K.stresslet_split(ctx, ctx.x0 + small[:, None] * d)
    m2 = np.polyfit(np.log(small), np.log(np.abs(T2s).max(axis=(1, 2, 3))), 1)[0]
    m1 = np.polyfit(np.log(small), np.log(np.abs(T1s).max(axis=(1, 2, 3))), 1)[0]
    assert m2 == pytest.approx(2.0, abs=0.01)
    assert m1 == pytest.approx(0.0, abs=0.01)


@pytest.mark.parametrize("b", [0.0, 0.02, -0.04])
def test_regularized_far_equals_plain(b):
    ctx = _ctx(b=b)
    d = rng.normal(size=(20, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    xs = ctx.y + 10 * ctx.delta * d
    assert np.allclose(K.reg_G(ctx, xs), K.laplace_G(xs - ctx.y), rtol=1e-12, atol=0)
    assert np.allclose(K.reg_gradG(ctx, xs), K.laplace_gradG(xs - ctx.y), rtol=1e-12, atol=0)
    assert np.allclose(K.reg_stokeslet(ctx, xs), K.stokeslet(ctx.y, xs), rtol=1e-12, atol=1e-14)
    assert np.allclose(K.reg_stresslet(ctx, xs), K.stresslet(ctx.y, xs), rtol=1e-12, atol=1e-14)


def test_reg_G_at_origin():
    ctx = _ctx(b=0.0)
    val = float(K.reg_G(ctx, ctx.y))
    assert val == pytest.approx(-(1 / (4 * math.pi * ctx.delta)) * (2 / math.sqrt(math.pi)) * (1 + 11 / 5),
                                rel=1e-13)


@pytest.mark.parametrize("b", [0.0, 0.03])
def test_regularized_continuous_at_origin(b):
    ctx = _ctx(b=b)
    e = 1e-9 * ctx.delta * np.array([[1.0, 0, 0], [-1.0, 0, 0]])
    ref = float(K.reg_G(ctx, ctx.y))
    assert np.allclose(K.reg_G(ctx, ctx.y + e), ref, rtol=1e-6)
    S0 = K.reg_stokeslet(ctx, ctx.y)
    assert np.allclose(K.reg_stokeslet(ctx, ctx.y + e), S0, rtol=1e-6, atol=1e-6 * np.abs(S0).max())


@pytest.mark.parametrize("b", [0.0, 0.01, -0.02])
def test_regularized_finite_on_scan(b):
    ctx = _ctx(b=b)
    r = np.linspace(0.0, 10.0, 401) * ctx.delta
    xs = ctx.y + r[:, None] * np.array([0.6, 0.0, 0.8])
    for fn in (K.reg_G, K.reg_gradG, K.reg_stokeslet, K.reg_stresslet):
        assert np.all(np.isfinite(fn(ctx, xs)))


def test_context_fields():
    ctx = _ctx(b=0.02, delta=0.04)
    assert ctx.lam == pytest.approx(0.5)
    assert not ctx.on_surface and _ctx(b=0.0).on_surface
    with pytest.raises(ValueError):
        K.KernelContext(np.zeros(3), np.zeros(3), 0.0, np.array([0, 0, 1.0]), 0.0)


def test_on_surface_stresslet_uses_star_factor():
    ctx = _ctx(b=0.0)
    x = ctx.x0 + np.array([0.02, 0.01, 0.0])
    R = ctx.y - x
    rho = np.linalg.norm(R) / ctx.delta
    ref = K.stresslet(ctx.y, x) * float(rg.onsurface_star_factors("s3*", 7, rho))
    assert np.allclose(K.reg_stresslet(ctx, x), ref, rtol=1e-12)


def test_pressure_normal_force_has_no_tangential_part():
    ctx = _ctx(b=0.01, n0=(0, 0, 1.0))
    n = rng.normal(size=(30, 3))
    n /= np.linalg.norm(n, axis=1)[:, None]
    xs = ctx.x0 + 0.1 * rng.normal(size=(30, 3))
    _, tang = K.pressure_kernels(ctx, xs, n, n, ctx.n0)
    assert np.all(tang == 0.0)


def test_pressure_vanishes_at_subtraction_point():
    ctx = _ctx(b=0.02, n0=(0, 0, 1.0))
    f = np.array([0.3, -1.2, 0.7])
    normal, tang = K.pressure_kernels(ctx, ctx.x0[None], ctx.n0[None], f[None], f)
    assert abs(normal[0]) <= 1e-14 and abs(tang[0]) <= 1e-14


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.floats(-0.2, 0.2),
       st.floats(0.05, 2.0))
def test_split_identity_property(d, b, scale):
    d = np.asarray(d)
    if np.linalg.norm(d) < 1e-3:
        return
    ctx = _ctx(b=b, n0=(0.2, 0.5, -0.8))
    x = ctx.x0 + scale * d / np.linalg.norm(d)
    if np.linalg.norm(ctx.y - x) < 1e-6:
        return
    T1, T2 = K.stresslet_split(ctx, x)
    T = K.stresslet(ctx.y, x)
    assert np.max(np.abs(T1 + T2 - T)) <= 1e-12 * np.max(np.abs(T))
