"""Partition-of-unity surface quadrature on grid-line intersections.

For each axis i the nodes are the points where grid lines parallel to e_i
cross the surface.  A node carries weight h^2 psi_i(n)/|n_i|, where
{psi_1, psi_2, psi_3} is a smooth partition of unity on the unit sphere with
psi_i supported on n_i^2 > T0 = cos^2(75 deg).  Sums over these nodes behave like the
trapezoidal rule on a closed surface.
"""
from dataclasses import dataclass, field
import math

import numpy as np

# psi_i is a bump in the angle between n and e_i, supported below THETA
THETA = math.radians(75.0)
BUMP_C = 3.0
T0 = math.cos(THETA) ** 2
_BISECT_WIDTH = 1e-3
_NEWTON_TOL = 1e-13


class QuadratureError(RuntimeError):
    pass


def _bump(t):
    # exp(-c/(1 - r^2)) with r = angle/THETA; flat to all orders at t = T0
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > T0
    r = np.arccos(np.sqrt(np.minimum(t[m], 1.0))) / THETA
    out[m] = np.exp(-BUMP_C / (1.0 - r * r))
    return out


def partition(n):
    """psi_i(n) for unit vectors n, shape (..., 3)."""
    beta = _bump(np.asarray(n, dtype=float) ** 2)
    return beta / beta.sum(axis=-1, keepdims=True)


@dataclass
class SurfaceQuadrature:
    h: float
    x: np.ndarray
    n: np.ndarray
    w: np.ndarray
    direction: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.w)

    @property
    def area(self):
        return float(self.w.sum())

    def to_csv(self, path):
        data = np.column_stack([self.x, self.n, self.w])
        np.savetxt(path, data, delimiter=",", header="x,y,z,nx,ny,nz,w",
                   comments="", fmt="%.17g")


_CHUNK_POINTS = 1 << 20


def grid_axes(surface, h, origin=(0.0, 0.0, 0.0), pad=0.0, extra=2):
    """Coordinates of origin + h Z^3 covering the padded bounding box."""
    origin = np.asarray(origin, dtype=float)
    lo, hi = surface.bbox()
    ilo = np.floor((lo - pad - origin) / h).astype(int) - extra
    ihi = np.ceil((hi + pad - origin) / h).astype(int) + extra
    return [origin[d] + h * np.arange(ilo[d], ihi[d] + 1) for d in range(3)]


def grid_slabs(axes, slab_axis, max_points=_CHUNK_POINTS):
    """Yield (ij-indexed) point blocks of the tensor grid, split along slab_axis."""
    plane = 1
    for d in range(3):
        if d != slab_axis:
            plane *= len(axes[d])
    step = max(1, max_points // plane)
    full = axes[slab_axis]
    for a in range(0, len(full), step):
        sub = list(axes)
        sub[slab_axis] = full[a:a + step]
        yield np.stack(np.meshgrid(*sub, indexing="ij"), axis=-1)


def build_quadrature(surface, h, origin=(0.0, 0.0, 0.0)):
    """Quadrature nodes on the grid origin + h Z^3."""
    axes = grid_axes(surface, h, origin)
    xs, ns, ws, dirs = [], [], [], []
    for d in range(3):
        for G in grid_slabs(axes, (d + 1) % 3):
            x, n = _line_roots(surface, G, surface.phi(G), d, h)
            psi = partition(n)[:, d]
            keep = psi > 0
            x, n, psi = x[keep], n[keep], psi[keep]
            xs.append(x)
            ns.append(n)
            ws.append(h * h * psi / np.abs(n[:, d]))
            dirs.append(np.full(len(x), d, dtype=np.int8))
    return SurfaceQuadrature(h=h, x=np.concatenate(xs), n=np.concatenate(ns),
                             w=np.concatenate(ws), direction=np.concatenate(dirs))


def _line_roots(surface, G, phi, d, h):
    pa = np.moveaxis(phi, d, -1)
    ga = np.moveaxis(G, d, -2)
    pos = pa > 0
    cross = pos[..., :-1] != pos[..., 1:]
    _check_double_crossings(surface, ga, pa, cross, d, h)
    idx = np.nonzero(cross)
    a = ga[idx]
    fa = pa[idx]
    t_lo = np.zeros(len(a))
    t_hi = np.ones(len(a))
    sign_lo = fa > 0
    e = np.zeros(3)
    e[d] = h

    def f(t):
        return surface.phi(a + t[:, None] * e)

    nbis = int(math.ceil(math.log2(1.0 / _BISECT_WIDTH)))
    for _ in range(nbis):
        mid = 0.5 * (t_lo + t_hi)
        pm = f(mid) > 0
        same = pm == sign_lo
        t_lo = np.where(same, mid, t_lo)
        t_hi = np.where(same, t_hi, mid)
    t = 0.5 * (t_lo + t_hi)
    for _ in range(20):
        x = a + t[:, None] * e
        val = surface.phi(x)
        if np.max(np.abs(val), initial=0.0) <= _NEWTON_TOL:
            break
        deriv = surface.grad(x)[:, d] * h
        t = np.clip(t - val / deriv, t_lo - 1e-9, t_hi + 1e-9)
    x = a + t[:, None] * e
    return x, surface.normal(x)


def _check_double_crossings(surface, ga, pa, cross, d, h):
    # two roots in one cell: equal end signs, slope changes sign inside, and
    # the interior extremum has the opposite sign
    slope = np.gradient(pa, axis=-1)
    near = np.abs(pa) < 2.0 * np.abs(slope).max(initial=0.0)
    cand = (~cross) & near[..., :-1] & near[..., 1:] & (slope[..., :-1] * slope[..., 1:] < 0)
    if not cand.any():
        return
    idx = np.nonzero(cand)
    a = ga[idx]
    e = np.zeros(3)
    e[d] = h
    t = np.full(len(a), 0.5)
    for _ in range(30):
        x = a + t[:, None] * e
        gd = surface.grad(x)[:, d]
        hd = surface.hess(x)[:, d, d]
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(hd != 0, gd / (hd * h), 0.0)
        t = np.clip(t - step, 0.0, 1.0)
    vals = surface.phi(a + t[:, None] * e)
    # grazing crossings carry zero weight; only flag pairs inside the support
    nd = np.maximum(np.abs(surface.normal(a)[:, d]), np.abs(surface.normal(a + e)[:, d]))
    bad = (np.sign(vals) != np.sign(pa[idx])) & (nd * nd > T0)
    if bad.any():
        k = int(np.argmax(bad))
        raise QuadratureError(
            f"grid line along axis {d} near {a[k]} crosses the surface twice "
            f"within one cell; refine h={h}")


def integrate_smooth(quad, f):
    """Sum f(x_j) w_j; f is a callable on node positions or an array."""
    vals = f(quad.x) if callable(f) else np.asarray(f)
    return float(np.sum(vals * quad.w))
