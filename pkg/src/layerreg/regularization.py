"""Moment integrals, correction coefficients and shape factors.

Every shape factor used here has the form

    s(rho) = erf(rho) + (2/sqrt(pi)) exp(-rho^2) rho * P(rho^2)

with ``P`` a polynomial of degree at most four in ``rho^2``.  Factors are
carried around as the coefficient array of ``P`` (last axis of length
``NPOLY``), which is what the summation backends consume.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import erf

from .special import erfcx

SQRT_PI = math.sqrt(math.pi)
TWO_OVER_SQRT_PI = 2.0 / SQRT_PI
NPOLY = 5
NSERIES = 18
SERIES_RHO = 0.5

# on-surface coefficients for the subtracted double layer / stresslet
STAR_B = {7: (3.0 / 5.0, 1.0 / 15.0), 5: (1.0 / 3.0, 0.0)}


@dataclass(frozen=True)
class RegConfig:
    """Regularization policy: order, delta = kappa h^q, neglect cutoff.

    kappa is fixed by requiring delta/h = kappa0 at the reference spacing h0.
    """

    p: int = 7
    q: float = 5.0 / 7.0
    kappa0: float = 4.0
    h0: float = 1.0 / 64.0
    cutoff: float = 8.0

    def __post_init__(self):
        if self.p not in (3, 5, 7):
            raise ValueError(f"order p must be 3, 5 or 7, got {self.p}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"exponent q must lie in (0, 1], got {self.q}")
        if self.kappa0 <= 0.0:
            raise ValueError("kappa0 must be positive")
        if self.h0 <= 0.0:
            raise ValueError("h0 must be positive")
        if self.cutoff < 4.0:
            raise ValueError("cutoff multiple must be at least 4")

    @property
    def kappa(self):
        return self.kappa0 * self.h0 ** (1.0 - self.q)

    def delta(self, h):
        return delta_policy(self, h)

    @classmethod
    def from_kappa(cls, kappa, p=7, q=5.0 / 7.0, h0=1.0 / 64.0, cutoff=8.0):
        """Config with delta = kappa * h^q directly."""
        return cls(p=p, q=q, kappa0=kappa / h0 ** (1.0 - q), h0=h0, cutoff=cutoff)


def delta_policy(cfg, h):
    if h <= 0:
        raise ValueError("grid spacing must be positive")
    return cfg.kappa * h ** cfg.q


@dataclass(frozen=True)
class ShapeCoefficients:
    lam: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray


def scaled_moments(lam):
    """Return exp(lam^2) I_n(lam) for n = 0, 2, 4."""
    lam = np.abs(np.asarray(lam, dtype=float))
    ex = erfcx(lam)
    l2 = lam * lam
    e0 = 1.0 / SQRT_PI - lam * ex
    e2 = (2.0 / 3.0) * ((0.5 - l2) / SQRT_PI + lam * l2 * ex)
    e4 = (8.0 / 15.0) * ((0.75 - 0.5 * l2 + l2 * l2) / SQRT_PI - lam * l2 * l2 * ex)
    return e0, e2, e4


def moment_I(n, lam):
    """Generalized moment I_n(lam) of erfc(rho)/rho, n in {0, 2, 4}."""
    if n not in (0, 2, 4):
        raise ValueError(f"moment index must be 0, 2 or 4, got {n}")
    lam = np.asarray(lam, dtype=float)
    scaled = scaled_moments(lam)[n // 2]
    return np.exp(-lam * lam) * scaled


def coeffs_a(p, lam):
    """Correction coefficients (a1, a2, a3) for order p at lam = b/delta."""
    lam = np.asarray(lam, dtype=float)
    e0, e2, e4 = scaled_moments(lam)
    l2 = lam * lam
    zero = np.zeros_like(e0)
    if p == 7:
        a3 = SQRT_PI / 16.0 * (2.0 * e0 - 4.0 * e2 + e4)
        a2 = SQRT_PI / 2.0 * (e0 - e2) + (4.0 * l2 + 7.0) * a3
        a1 = SQRT_PI * e0 + 2.0 * (l2 + 1.0) * a2 - (4.0 * l2 * l2 + 6.0 * l2 + 6.0) * a3
    elif p == 5:
        a3 = zero
        a2 = SQRT_PI / 2.0 * (e0 - e2)
        a1 = SQRT_PI * e0 + 2.0 * (l2 + 1.0) * a2
    elif p == 3:
        a3 = zero
        a2 = zero
        a1 = SQRT_PI * e0
    else:
        raise ValueError(f"order p must be 3, 5 or 7, got {p}")
    return ShapeCoefficients(lam=lam, a1=a1, a2=a2, a3=a3)


def _stack(*cols):
    cols = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in cols])
    return np.stack(cols, axis=-1)


def s1_poly_from_a(a1, a2, a3):
    z = np.zeros_like(np.asarray(a1, dtype=float))
    return _stack(a1, -2.0 * (a2 + a3), 4.0 * a3, z, z)


def s2_poly_from_a(a1, a2, a3):
    a1 = np.asarray(a1, dtype=float)
    return _stack(-np.ones_like(a1), 2.0 * (a1 + 2.0 * a2 + 2.0 * a3),
                  -4.0 * (a2 + 5.0 * a3), 8.0 * a3, np.zeros_like(a1))


def s3_poly_from_a(a1, a2, a3):
    a1 = np.asarray(a1, dtype=float)
    one = np.ones_like(a1)
    f = 4.0 / 3.0
    return _stack(-one, -(2.0 / 3.0) * one, f * (a1 + 4.0 * a2 + 12.0 * a3),
                  -2.0 * f * (a2 + 9.0 * a3), 4.0 * f * a3)


def s1_poly(p, lam):
    c = coeffs_a(p, lam)
    return s1_poly_from_a(c.a1, c.a2, c.a3)


def s2_poly(p, lam):
    c = coeffs_a(p, lam)
    return s2_poly_from_a(c.a1, c.a2, c.a3)


def s3_poly(p, lam):
    c = coeffs_a(p, lam)
    return s3_poly_from_a(c.a1, c.a2, c.a3)


def star_poly(kind, p):
    """Polynomial of the on-surface subtracted-form factor s2* or s3*."""
    if p not in STAR_B:
        raise ValueError(f"on-surface star factors exist for p = 5, 7, got {p}")
    b1, b2 = STAR_B[p]
    if kind == "s2*":
        return s2_poly_from_a(b1, b2, 0.0)
    if kind == "s3*":
        return s3_poly_from_a(b1, b2, 0.0)
    raise ValueError(f"unknown star factor {kind!r}")


def base_poly(kind):
    """Unmodified factors: s1 = erf, s2, s3 (third order on the surface)."""
    z = 0.0
    if kind == "s1":
        return np.array([z, z, z, z, z])
    if kind == "s2":
        return np.array([-1.0, z, z, z, z])
    if kind == "s3":
        return np.array([-1.0, -2.0 / 3.0, z, z, z])
    raise ValueError(f"unknown base factor {kind!r}")


def shape_value(poly, rho, cutoff=None):
    """Evaluate erf(rho) + (2/sqrt(pi)) e^{-rho^2} rho P(rho^2)."""
    poly = np.asarray(poly, dtype=float)
    rho = np.asarray(rho, dtype=float)
    r2 = rho * rho
    acc = poly[..., NPOLY - 1]
    for k in range(NPOLY - 2, -1, -1):
        acc = acc * r2 + poly[..., k]
    val = erf(rho) + TWO_OVER_SQRT_PI * np.exp(-r2) * rho * acc
    if cutoff is not None:
        val = np.where(rho >= cutoff, 1.0, val)
    return val


def series_coefficients(poly):
    """Taylor coefficients d_n with s(rho) = (2/sqrt(pi)) rho sum_n d_n rho^{2n}."""
    poly = np.asarray(poly, dtype=float)
    d = np.zeros(poly.shape[:-1] + (NSERIES,))
    for n in range(NSERIES):
        d[..., n] = (-1.0) ** n / (math.factorial(n) * (2 * n + 1))
        for k in range(min(n, NPOLY - 1) + 1):
            d[..., n] += poly[..., k] * (-1.0) ** (n - k) / math.factorial(n - k)
    return d


def shape_over_power(poly, rho, power):
    """s(rho) / rho^power for power in {1, 3, 5}, stable as rho -> 0.

    The caller guarantees the factor vanishes like rho^power at the origin
    (s1: power 1; s2-type: 3; s3-type: 5).
    """
    poly = np.asarray(poly, dtype=float)
    rho = np.asarray(rho, dtype=float)
    start = (power - 1) // 2
    d = series_coefficients(poly)
    r2 = rho * rho
    ser = np.zeros(np.broadcast(rho, poly[..., 0]).shape)
    for n in range(NSERIES - 1, start - 1, -1):
        ser = ser * r2 + d[..., n]
    ser = TWO_OVER_SQRT_PI * ser
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = shape_value(poly, rho) / rho ** power
    return np.where(rho < SERIES_RHO, ser, direct)


def shape_s1(p, rho, lam, cutoff=None):
    return shape_value(s1_poly(p, lam), rho, cutoff)


def shape_s2(p, rho, lam, cutoff=None):
    return shape_value(s2_poly(p, lam), rho, cutoff)


def shape_s3(p, rho, lam, cutoff=None):
    return shape_value(s3_poly(p, lam), rho, cutoff)


def onsurface_star_factors(kind, p, rho, cutoff=None):
    return shape_value(star_poly(kind, p), rho, cutoff)


def s1_limit(p, lam):
    """Limit of s1^(p)(rho)/rho as rho -> 0."""
    return TWO_OVER_SQRT_PI * (1.0 + coeffs_a(p, lam).a1)
