"""Independent reference computations used by the tests.

Nothing here calls into the closed forms of the package: moments come from
adaptive quadrature of their defining integrals, shape-factor derivatives from
sympy, geometry from brute-force sampling.
"""
import functools
import math

import numpy as np
import sympy as sp
from scipy import integrate, optimize
from scipy.special import erf, erfc

_rho = sp.Symbol("rho", positive=True)
_S1 = sp.erf(_rho)
_S2 = sp.erf(_rho) - 2 / sp.sqrt(sp.pi) * _rho * sp.exp(-_rho ** 2)
_S3 = sp.erf(_rho) - 2 / sp.sqrt(sp.pi) * (_rho + sp.Rational(2, 3) * _rho ** 3) * sp.exp(-_rho ** 2)
BASE = {"s1": _S1, "s2": _S2, "s3": _S3}


@functools.lru_cache(maxsize=None)
def base_derivative(kind, k):
    """rho^k d^k s/drho^k for the base factor, as a float function."""
    expr = sp.simplify(_rho ** k * sp.diff(BASE[kind], _rho, k)) if k else BASE[kind]
    return sp.lambdify(_rho, expr, modules=[{"erf": erf}, "numpy"])


def _quad(f, a):
    val, err = integrate.quad(f, a, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def I_n(n, lam):
    """int_{|lam|}^inf erfc(rho) (rho^2 - lam^2)^(n/2) drho."""
    L = abs(lam)
    return _quad(lambda r: erfc(r) * (r * r - L * L) ** (n / 2), L)


def I_kn(k, n, lam):
    L = abs(lam)
    g = base_derivative("s1", k)
    return _quad(lambda r: g(r) * (r * r - L * L) ** (n / 2), L)


def J_n(n, lam):
    L = abs(lam)
    s2 = base_derivative("s2", 0)
    return _quad(lambda r: (s2(r) - 1.0) / r ** 2 * (r * r - L * L) ** ((n + 2) / 2), L)


def J_kn(k, n, lam):
    L = abs(lam)
    g = base_derivative("s2", k)
    return _quad(lambda r: g(r) / r ** 2 * (r * r - L * L) ** ((n + 2) / 2), L)


def K_n(n, lam):
    L = abs(lam)
    s3 = base_derivative("s3", 0)
    return _quad(lambda r: (1.0 - s3(r)) / r ** 4 * (r * r - L * L) ** ((n + 4) / 2), L)


def K_kn(k, n, lam):
    L = abs(lam)
    g = base_derivative("s3", k)
    return _quad(lambda r: g(r) / r ** 4 * (r * r - L * L) ** ((n + 4) / 2), L)


def coefficients_by_solve(p, lam):
    """(a1, a2, a3) from the moment system solved numerically."""
    m = {3: 1, 5: 2, 7: 3}[p]
    ns = (0, 2, 4)[:m]
    A = np.array([[I_kn(k, n, lam) for k in range(1, m + 1)] for n in ns])
    rhs = np.array([I_n(n, lam) for n in ns])
    a = np.linalg.solve(A, rhs)
    return tuple(np.concatenate([a, np.zeros(3 - m)]))


def shape_from_derivatives(kind, coeffs, rho):
    """s + sum_k c_k rho^k s^[k] evaluated from sympy derivatives."""
    rho = np.asarray(rho, dtype=float)
    out = base_derivative(kind, 0)(rho) * np.ones_like(rho)
    for k, c in enumerate(coeffs, start=1):
        if c:
            out = out + c * base_derivative(kind, k)(rho)
    return out


def poly_shape(coeffs_odd, rho):
    """erf(rho) + (2/sqrt(pi)) e^{-rho^2} sum_i c_i rho^(2i+1)."""
    rho = np.asarray(rho, dtype=float)
    acc = sum(c * rho ** (2 * i + 1) for i, c in enumerate(coeffs_odd))
    return erf(rho) + 2.0 / math.sqrt(math.pi) * np.exp(-rho * rho) * acc


# geometry --------------------------------------------------------------------

def ellipsoid_area(a, b, c, n=400):
    """Surface area by Gauss-Legendre in cos(theta) times periodic trapezoid in phi."""
    t, w = np.polynomial.legendre.leggauss(n)
    ph = np.linspace(0.0, 2.0 * math.pi, 2 * n, endpoint=False)
    T, P = np.meshgrid(t, ph, indexing="ij")
    st = np.sqrt(1.0 - T * T)
    # x = a st cos, y = b st sin, z = c t ; |x_t x x_phi| in (t, phi)
    xt = np.stack([-a * T / st * np.cos(P), -b * T / st * np.sin(P), c * np.ones_like(T)], -1)
    xp = np.stack([-a * st * np.sin(P), b * st * np.cos(P), np.zeros_like(T)], -1)
    dA = np.linalg.norm(np.cross(xt, xp), axis=-1)
    return float(np.sum(dA * w[:, None]) * (2.0 * math.pi / (2 * n)))


def ellipsoid_closest_brute(axes, y, n=800):
    """Nearest point on an axis-aligned ellipsoid: dense sample then local minimizer."""
    a, b, c = axes
    th = np.linspace(0.0, math.pi, n)
    ph = np.linspace(0.0, 2.0 * math.pi, 2 * n, endpoint=False)
    T, P = np.meshgrid(th, ph, indexing="ij")

    def pt(t, p):
        return np.array([a * np.sin(t) * np.cos(p), b * np.sin(t) * np.sin(p), c * np.cos(t)])

    X = np.stack([a * np.sin(T) * np.cos(P), b * np.sin(T) * np.sin(P), c * np.cos(T)], -1)
    d2 = np.sum((X - y) ** 2, axis=-1)
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    res = optimize.minimize(lambda v: np.sum((pt(*v) - y) ** 2), [th[i], ph[j]],
                            method="Nelder-Mead", options={"xatol": 1e-14, "fatol": 1e-28,
                                                           "maxiter": 20000})
    coarse = pt(*res.x)
    # refine: x_i = a_i^2 y_i / (a_i^2 + t) on the largest root of the secular equation
    ax = np.array([a, b, c], dtype=float)

    def sec(t):
        return np.sum((ax * y / (ax * ax + t)) ** 2) - 1.0

    lo = -np.min(ax) ** 2 * (1.0 - 1e-15)
    hi = 1.0
    while sec(hi) > 0:
        hi *= 2.0
    t = optimize.brentq(sec, lo, hi, xtol=1e-17, rtol=1e-15, maxiter=500)
    fine = ax * ax * y / (ax * ax + t)
    if np.linalg.norm(fine - coarse) > 1e-6:
        raise RuntimeError("oracle refinements disagree")
    return fine


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def sphere_quadrature(n_theta=200):
    """Gauss-Legendre x trapezoid rule on the unit sphere: (x, n, w)."""
    t, w = np.polynomial.legendre.leggauss(n_theta)
    nphi = 2 * n_theta
    ph = np.linspace(0.0, 2.0 * math.pi, nphi, endpoint=False)
    T, P = np.meshgrid(t, ph, indexing="ij")
    st = np.sqrt(1.0 - T * T)
    X = np.stack([st * np.cos(P), st * np.sin(P), T], -1).reshape(-1, 3)
    W = np.repeat(w, nphi) * (2.0 * math.pi / nphi)
    return X, X.copy(), W


def tangent_fd(fun, x, n, eps=1e-5):
    """Tangential gradient by central differences along two tangent directions."""
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = a - np.dot(a, n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    d1 = (fun(x + eps * t1) - fun(x - eps * t1)) / (2 * eps)
    d2 = (fun(x + eps * t2) - fun(x - eps * t2)) / (2 * eps)
    return d1 * t1 + d2 * t2
