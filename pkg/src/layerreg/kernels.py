"""Pointwise singular and regularized kernels.

Conventions: G(r) = -1/(4 pi |r|), grad G(r) = r/(4 pi |r|^3).  For the
Stokes kernels R = y - x.  The regularized forms here act on one target
(a KernelContext) and an array of sources; the summation backends in
``layerreg.backend`` implement the same formulas over many targets.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import regularization as rg

FOUR_PI = 4.0 * math.pi


class SingularKernelError(ValueError):
    pass


def _check_nonzero(r2):
    if np.any(r2 == 0.0):
        raise SingularKernelError("kernel evaluated at coincident points")


def laplace_G(r):
    r = np.asarray(r, dtype=float)
    r2 = np.sum(r * r, axis=-1)
    _check_nonzero(r2)
    return -1.0 / (FOUR_PI * np.sqrt(r2))


def laplace_gradG(r):
    r = np.asarray(r, dtype=float)
    r2 = np.sum(r * r, axis=-1)
    _check_nonzero(r2)
    return r / (FOUR_PI * r2[..., None] ** 1.5)


def stokeslet(y, x):
    R = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r2 = np.sum(R * R, axis=-1)
    _check_nonzero(r2)
    r = np.sqrt(r2)[..., None, None]
    return np.eye(3) / r + R[..., :, None] * R[..., None, :] / r ** 3


def stresslet(y, x):
    R = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r2 = np.sum(R * R, axis=-1)
    _check_nonzero(r2)
    rrr = np.einsum("...i,...j,...k->...ijk", R, R, R)
    return -6.0 * rrr / r2[..., None, None, None] ** 2.5


@dataclass
class KernelContext:
    """Target y with its closest point x0 = y - b n0 and smoothing length."""

    y: np.ndarray
    x0: np.ndarray
    b: float
    n0: np.ndarray
    delta: float
    p: int = 7
    cutoff: float = 8.0
    polys: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.x0 = np.asarray(self.x0, dtype=float)
        self.n0 = np.asarray(self.n0, dtype=float)
        self.b = float(self.b)
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    @classmethod
    def from_projection(cls, y, cp, delta, p=7, cutoff=8.0):
        return cls(y, cp.x0, cp.b, cp.n0, delta, p, cutoff)

    @property
    def lam(self):
        return self.b / self.delta

    @property
    def on_surface(self):
        return self.b == 0.0

    def poly(self, kind):
        # cached coefficient rows for s1, s2, s3 (lambda dependent) and s2*, s3*
        if kind not in self.polys:
            if kind == "s1":
                v = rg.s1_poly(self.p, self.lam)
            elif kind == "s2":
                v = rg.s2_poly(self.p, self.lam)
            elif kind == "s3":
                v = rg.s3_poly(self.p, self.lam)
            else:
                v = rg.star_poly(kind, self.p)
            self.polys[kind] = v
        return self.polys[kind]

    def factor_over(self, kind, rho, power):
        """s(rho)/rho^power, replaced by 1/rho^power beyond the cutoff."""
        val = rg.shape_over_power(self.poly(kind), rho, power)
        with np.errstate(divide="ignore"):
            plain = 1.0 / rho ** power
        return np.where(rho >= self.cutoff, plain, val)


def _hat(ctx, x):
    return np.asarray(x, dtype=float) - ctx.x0


def _sym2(a, b_):
    # a b b + b a b + b b a, symmetrized outer products
    return (np.einsum("...i,...j,...k->...ijk", a, b_, b_)
            + np.einsum("...i,...j,...k->...ijk", b_, a, b_)
            + np.einsum("...i,...j,...k->...ijk", b_, b_, a))


def stresslet_split(ctx, x):
    """T = T1 + T2 with T1 ~ 1/r^3 and T2 ~ 1/r^5 around the target's x0."""
    xh = _hat(ctx, x)
    n = np.broadcast_to(ctx.n0, xh.shape)
    b = ctx.b
    R = b * n - xh
    r2 = np.sum(R * R, axis=-1)[..., None, None, None]
    nnn = np.einsum("...i,...j,...k->...ijk", n, n, n)
    A = b * nnn - _sym2(xh, n)
    B = b * _sym2(n, xh) - np.einsum("...i,...j,...k->...ijk", xh, xh, xh)
    c = (np.sum(xh * xh, axis=-1) - 2.0 * b * np.sum(xh * n, axis=-1))[..., None, None, None]
    T1 = -6.0 * A / r2 ** 1.5
    T2 = -6.0 * (B - c * A) / r2 ** 2.5
    return T1, T2


def reg_G(ctx, x):
    r = np.linalg.norm(np.asarray(x, dtype=float) - ctx.y, axis=-1)
    rho = r / ctx.delta
    return -ctx.factor_over("s1", rho, 1) / (FOUR_PI * ctx.delta)


def reg_gradG(ctx, x, star=False):
    """grad G(x - y) s2(r/delta); star selects s2* for on-surface targets."""
    r = np.asarray(x, dtype=float) - ctx.y
    rho = np.linalg.norm(r, axis=-1) / ctx.delta
    f = ctx.factor_over("s2*" if star else "s2", rho, 3)
    return r * (f / (FOUR_PI * ctx.delta ** 3))[..., None]


def reg_stokeslet(ctx, x):
    R = ctx.y - np.asarray(x, dtype=float)
    rho = np.linalg.norm(R, axis=-1) / ctx.delta
    f1 = ctx.factor_over("s1", rho, 1) / ctx.delta
    f2 = ctx.factor_over("s2", rho, 3) / ctx.delta ** 3
    return (np.eye(3) * f1[..., None, None]
            + R[..., :, None] * R[..., None, :] * f2[..., None, None])


def reg_stresslet(ctx, x):
    """T1 s2 + T2 s3 off the surface, T s3* on it."""
    x = np.asarray(x, dtype=float)
    R = ctx.y - x
    rho = np.linalg.norm(R, axis=-1) / ctx.delta
    if ctx.on_surface:
        f = ctx.factor_over("s3*", rho, 5) / ctx.delta ** 5
        rrr = np.einsum("...i,...j,...k->...ijk", R, R, R)
        return -6.0 * rrr * f[..., None, None, None]
    T1, T2 = stresslet_split(ctx, x)
    s2 = rg.shape_value(ctx.poly("s2"), rho, ctx.cutoff)
    s3 = rg.shape_value(ctx.poly("s3"), rho, ctx.cutoff)
    return T1 * s2[..., None, None, None] + T2 * s3[..., None, None, None]


def pressure_kernels(ctx, x, n, f, f0):
    """Normal and tangential pressure integrands at sources x (weights excluded).

    Normal part: -(dG/dn)(f.n - f0.n0); tangential part:
    (n x grad G(y - x)) . (n x f - n0 x f0), both with s2-regularized grad G.
    """
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    f = np.asarray(f, dtype=float)
    f0 = np.asarray(f0, dtype=float)
    g = -reg_gradG(ctx, x)  # grad G(y - x)
    dGdn = -np.sum(g * n, axis=-1)  # n(x) . grad G(x - y)
    f0n = float(np.dot(f0, ctx.n0))
    normal = -dGdn * (np.sum(f * n, axis=-1) - f0n)
    tang = np.sum(np.cross(n, g) * (np.cross(n, f) - np.cross(ctx.n0, f0)), axis=-1)
    return normal, tang
