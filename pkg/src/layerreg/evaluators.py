"""Regularized layer potentials at on-surface, near-surface and far targets.

One smoothing length delta is used per sweep.  A target is near when its
signed distance satisfies |b| <= cutoff*delta; near and on-surface targets use
the subtracted forms with shape-factor coefficients depending on b/delta, far
targets use the plain kernels without subtraction.
"""
from dataclasses import dataclass
import csv

import numpy as np

from . import backend as bk
from . import regularization as rg
from .quadrature import grid_axes, grid_slabs
from .surfaces import closest_point

FAR, NEAR, ON = 0, 1, 2


@dataclass
class TargetSet:
    y: np.ndarray
    kind: np.ndarray
    x0: np.ndarray
    b: np.ndarray
    n0: np.ndarray
    index: np.ndarray = None  # source node index for on-surface targets, if any

    def __len__(self):
        return len(self.y)

    @property
    def chi(self):
        """1 inside, 0 outside, 1/2 on the surface (only meaningful off FAR)."""
        return np.where(self.kind == ON, 0.5, np.where(self.b < 0, 1.0, 0.0))

    def subset(self, mask):
        idx = None if self.index is None else self.index[mask]
        return TargetSet(self.y[mask], self.kind[mask], self.x0[mask], self.b[mask],
                         self.n0[mask], idx)


def make_targets(surface, y, delta, cutoff=8.0):
    """Classify arbitrary points; only points that may be near are projected."""
    y = bk.f64(y, 3)
    nt = len(y)
    kind = np.zeros(nt, dtype=np.int8)
    x0 = np.zeros((nt, 3))
    b = np.zeros(nt)
    n0 = np.zeros((nt, 3))
    g = surface.grad(y)
    est = np.abs(surface.phi(y)) / np.maximum(np.linalg.norm(g, axis=-1), 1e-300)
    cand = np.nonzero(est <= 2.0 * cutoff * delta)[0]
    if len(cand):
        cp = closest_point(surface, y[cand])
        near = np.abs(cp.b) <= cutoff * delta
        sel = cand[near]
        kind[sel] = NEAR
        x0[sel] = cp.x0[near]
        b[sel] = cp.b[near]
        n0[sel] = cp.n0[near]
    return TargetSet(y, kind, x0, b, n0)


def surface_targets(quad, index=None):
    """On-surface targets at quadrature nodes (x0 = node, b = 0)."""
    if index is None:
        index = np.arange(len(quad))
    index = np.asarray(index)
    x = quad.x[index]
    return TargetSet(x.copy(), np.full(len(index), ON, dtype=np.int8), x.copy(),
                     np.zeros(len(index)), quad.n[index].copy(), index)


def classify_targets(surface, h, band, probability, seed, origin=(0.0, 0.0, 0.0),
                     rel_tol=1e-10):
    """Grid points origin + h Z^3 with |b| <= band, chi = 1/2 points dropped,
    each kept independently with the given probability."""
    pts = []
    for G in grid_slabs(grid_axes(surface, h, origin, pad=band, extra=1), 0):
        G = G.reshape(-1, 3)
        with np.errstate(divide="ignore", invalid="ignore"):
            gn = np.linalg.norm(surface.grad(G), axis=-1)
        est = np.abs(surface.phi(G)) / np.maximum(gn, 1e-300)
        pts.append(G[est <= 2.0 * band + h])
    G = np.concatenate(pts)
    cp = closest_point(surface, G)
    tol = rel_tol * surface.diameter
    keep = (np.abs(cp.b) <= band) & (np.abs(cp.b) > tol)
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(len(G))
    keep &= u < probability
    n = int(keep.sum())
    return TargetSet(G[keep], np.full(n, NEAR, dtype=np.int8), cp.x0[keep], cp.b[keep],
                     cp.n0[keep])


class LayerDensity:
    """Density samples at the quadrature nodes, plus an optional analytic field.

    ``field(x, n)`` gives the density at surface points x with normals n and
    is used for the subtraction value at x0.  Without it, x0 must be a node
    (targets carrying ``index``).
    """

    def __init__(self, quad, values, field=None):
        values = np.asarray(values, dtype=float)
        if values.shape[0] != len(quad):
            raise ValueError("one density value per quadrature node required")
        self.quad = quad
        self.values = values
        self.field = field

    @classmethod
    def from_field(cls, quad, field):
        return cls(quad, field(quad.x, quad.n), field)

    @property
    def is_vector(self):
        return self.values.ndim == 2

    def at(self, targets, mask=None):
        """Density at the targets' closest points (zeros where mask is False)."""
        shape = (len(targets),) + self.values.shape[1:]
        out = np.zeros(shape)
        m = np.ones(len(targets), dtype=bool) if mask is None else np.asarray(mask)
        if not m.any():
            return out
        if self.field is not None:
            out[m] = self.field(targets.x0[m], targets.n0[m])
        elif targets.index is not None:
            out[m] = self.values[targets.index[m]]
        else:
            raise ValueError("density at x0 needs an analytic field or node targets")
        return out


def _rows(targets, p, delta, kind, star=None):
    """Coefficient rows (P, D) per target; far rows are zero."""
    P = np.zeros((len(targets), rg.NPOLY))
    off = targets.kind == NEAR
    on = targets.kind == ON
    lam_fn = {"s1": rg.s1_poly, "s2": rg.s2_poly, "s3": rg.s3_poly}[kind]
    if off.any():
        P[off] = lam_fn(p, targets.b[off] / delta)
    if on.any():
        P[on] = rg.star_poly(star, p) if star else lam_fn(p, 0.0)
    return bk.f64(P), bk.f64(rg.series_coefficients(P))


def _delta(cfg, quad, delta):
    return cfg.delta(quad.h) if delta is None else float(delta)


def _near(targets):
    return bk.i8(targets.kind != FAR)


def eval_harmonic_layers(quad, f, g, targets, cfg, delta=None, backend=None):
    """Single layer of f and double layer of g in one sweep; returns (S, D)."""
    delta = _delta(cfg, quad, delta)
    near = _near(targets)
    m = bk.get(backend)
    P1, D1 = _rows(targets, cfg.p, delta, "s1")
    P2, D2 = _rows(targets, cfg.p, delta, "s2", star="s2*" if cfg.p in rg.STAR_B else None)
    fv = np.zeros(len(quad)) if f is None else f.values
    if g is None:
        gv, g0 = np.zeros(len(quad)), np.zeros(len(targets))
    else:
        gv, g0 = g.values, g.at(targets, near.astype(bool))
    S, D = m.laplace_layers(bk.f64(targets.y), bk.f64(quad.x), bk.f64(quad.n), bk.f64(quad.w),
                            bk.f64(fv), bk.f64(gv), bk.f64(g0), near, P1, D1, P2, D2,
                            delta, cfg.cutoff)
    D = D + np.where(near.astype(bool), targets.chi * g0, 0.0)
    return S, D


def eval_harmonic_single(quad, f, targets, cfg, delta=None, backend=None):
    return eval_harmonic_layers(quad, f, None, targets, cfg, delta, backend)[0]


def eval_harmonic_double(quad, g, targets, cfg, delta=None, backend=None):
    return eval_harmonic_layers(quad, None, g, targets, cfg, delta, backend)[1]


def eval_stokes_single(quad, f, targets, cfg, delta=None, subtract=True, backend=None):
    """(1/8pi) int S f, subtracting (f(x0).n0) n(x) at near and on-surface targets."""
    delta = _delta(cfg, quad, delta)
    near = _near(targets)
    m = bk.get(backend)
    P1, D1 = _rows(targets, cfg.p, delta, "s1")
    P2, D2 = _rows(targets, cfg.p, delta, "s2")
    if subtract:
        f0 = f.at(targets, near.astype(bool))
        f0n = np.sum(f0 * targets.n0, axis=-1)
    else:
        f0n = np.zeros(len(targets))
    return m.stokes_single(bk.f64(targets.y), bk.f64(quad.x), bk.f64(quad.n), bk.f64(quad.w),
                           bk.f64(f.values), bk.f64(f0n), near, P1, D1, P2, D2,
                           delta, cfg.cutoff)


def eval_stokes_double(quad, q, targets, cfg, delta=None, backend=None, q0=None):
    """(1/8pi) int T (q - q(x0)) n + chi q(x0).

    q0 overrides the subtraction values (rows for far targets are ignored).
    """
    delta = _delta(cfg, quad, delta)
    near = _near(targets)
    m = bk.get(backend)
    P2, D2 = _rows(targets, cfg.p, delta, "s2")
    P3, D3 = _rows(targets, cfg.p, delta, "s3", star="s3*" if cfg.p in rg.STAR_B else None)
    nb = near.astype(bool)
    if q0 is None:
        q0 = q.at(targets, nb)
    else:
        q0 = np.where(nb[:, None], np.asarray(q0, dtype=float), 0.0)
    mode = bk.i8(targets.kind)
    V = m.stokes_double(bk.f64(targets.y), bk.f64(quad.x), bk.f64(quad.n), bk.f64(quad.w),
                        bk.f64(q.values), bk.f64(q0), mode, bk.f64(targets.x0),
                        bk.f64(targets.n0), bk.f64(targets.b), P2, D2, P3, D3,
                        delta, cfg.cutoff)
    return V + np.where(nb, targets.chi, 0.0)[:, None] * q0


def eval_pressure(quad, f, targets, cfg, delta=None, backend=None):
    """p = int grad G(y - x) . f, split into normal and tangential parts."""
    delta = _delta(cfg, quad, delta)
    near = _near(targets)
    m = bk.get(backend)
    P2, D2 = _rows(targets, cfg.p, delta, "s2")
    nb = near.astype(bool)
    f0 = f.at(targets, nb)
    f0n = np.sum(f0 * targets.n0, axis=-1)
    t0 = np.cross(targets.n0, f0)
    pn, pt = m.pressure(bk.f64(targets.y), bk.f64(quad.x), bk.f64(quad.n), bk.f64(quad.w),
                        bk.f64(f.values), bk.f64(f0n), bk.f64(t0), near, P2, D2,
                        delta, cfg.cutoff)
    return pn + pt - np.where(nb, targets.chi * f0n, 0.0)


def write_targets_csv(path, targets, computed, exact=None):
    """One row per target: x,y,z,b, computed value(s), exact value(s), abs error."""
    computed = np.asarray(computed, dtype=float).reshape(len(targets), -1)
    ncomp = computed.shape[1]
    names = ["value"] if ncomp == 1 else [f"value_{i}" for i in range(ncomp)]
    header = ["x", "y", "z", "b"] + names
    rows = [targets.y, targets.b[:, None], computed]
    if exact is not None:
        exact = np.asarray(exact, dtype=float).reshape(len(targets), -1)
        header += ["exact"] if ncomp == 1 else [f"exact_{i}" for i in range(ncomp)]
        header += ["abs_error"]
        rows += [exact, np.linalg.norm(computed - exact, axis=1)[:, None]]
    data = np.hstack(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in data:
            w.writerow([repr(float(v)) for v in row])
