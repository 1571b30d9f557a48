"""Extension of near-surface integral values to a cubic grid.

Integrals are computed only at nodes close to the surface.  A fourth-order
discrete Laplacian of those values, restricted to nodes whose stencil reaches
across the surface, is inverted with a sine transform together with a smooth
extension of the boundary data.  Used for a harmonic interface problem and for
Stokes flow (pressure first, then velocity).
"""
from dataclasses import dataclass, field
import math
import struct
import time

import numpy as np
from scipy.fft import dstn

from . import evaluators as ev
from .quadrature import build_quadrature, grid_slabs
from .regularization import RegConfig
from .surfaces import Ellipsoid, MolecularSurface, closest_point

# 15-point stencil as (offsets, weight) in units of 1/h^2
_CORNERS = [(i, j, k) for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)]
_AXES = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
STENCIL_15 = ([((0, 0, 0), (2.0 / 3.0) * (-6.0 - 1.0))]
              + [(o, 2.0 / 3.0) for o in _AXES]
              + [(o, 2.0 / 3.0 / 8.0) for o in _CORNERS])


@dataclass
class CubeGrid:
    """Nodes origin + h*(i, j, k), 0 <= i, j, k <= n, with n = L/h."""

    h: float
    L: float = 3.0
    origin: tuple = (0.0, 0.0, 0.0)
    values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        n = self.L / self.h
        if abs(n - round(n)) > 1e-9 or round(n) < 4:
            raise ValueError("L/h must be an integer of at least 4")
        self.n = int(round(n))
        self.origin = tuple(float(v) for v in self.origin)

    @property
    def shape(self):
        return (self.n + 1,) * 3

    @property
    def n_interior(self):
        return (self.n - 1) ** 3

    def axis(self, d):
        return self.origin[d] + self.h * np.arange(self.n + 1)

    def points(self, index=None):
        """Node coordinates, all nodes (ij order) or at flat indices."""
        if index is None:
            ax = [self.axis(d) for d in range(3)]
            return np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1).reshape(-1, 3)
        i, j, k = np.unravel_index(index, self.shape)
        return np.stack([self.origin[0] + self.h * i, self.origin[1] + self.h * j,
                         self.origin[2] + self.h * k], axis=-1)

    def with_values(self, values):
        return CubeGrid(self.h, self.L, self.origin, np.asarray(values, dtype=float))

    def boundary_index(self):
        m = np.zeros(self.shape, dtype=bool)
        m[[0, -1], :, :] = True
        m[:, [0, -1], :] = True
        m[:, :, [0, -1]] = True
        return np.flatnonzero(m)


# boundary extension ----------------------------------------------------------

def _ell(w, r):
    return w if r == 1 else 1.0 - w


def extend_boundary_square(g):
    """Square [0,1]^2 extension E - C from edge values.

    ``g(x1, x2)`` is evaluated only on the edges (broadcasting arrays).
    Returns a function of (x1, x2).
    """
    def gbar(x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        one, zero = np.ones_like(x1), np.zeros_like(x1)
        E = (x1 * g(one, x2) + (1 - x1) * g(zero, x2)
             + x2 * g(x1, one) + (1 - x2) * g(x1, zero))
        C = sum(_ell(x1, r) * _ell(x2, s) * g(r * one, s * one) for r in (0, 1) for s in (0, 1))
        return E - C
    return gbar


def extend_boundary_cube(g):
    """Cube [0,1]^3 extension F - E + C from face values ``g(x1, x2, x3)``."""
    def gbar(x1, x2, x3):
        X = list(np.broadcast_arrays(*(np.asarray(v, float) for v in (x1, x2, x3))))
        one = np.ones_like(X[0])
        F = 0.0
        E = 0.0
        for i in range(3):
            j, k = [d for d in range(3) if d != i]
            for r in (0, 1):
                z = list(X)
                z[i] = r * one
                F = F + _ell(X[i], r) * g(*z)
                for s in (0, 1):
                    z = list(X)
                    z[j], z[k] = r * one, s * one
                    E = E + _ell(X[j], r) * _ell(X[k], s) * g(*z)
        C = 0.0
        for r in (0, 1):
            for s in (0, 1):
                for t in (0, 1):
                    C = C + _ell(X[0], r) * _ell(X[1], s) * _ell(X[2], t) * g(r * one, s * one, t * one)
        return F - E + C
    return gbar


def extend_grid_boundary(values):
    """Cube extension of the face values of a node array (n+1)^3 (or (n+1)^3 x m)."""
    v = np.asarray(values, dtype=float)
    n = v.shape[0] - 1
    t = np.arange(n + 1) / n
    T = [t[:, None, None], t[None, :, None], t[None, None, :]]
    if v.ndim == 4:
        return np.stack([extend_grid_boundary(v[..., c]) for c in range(v.shape[3])], axis=-1)

    def face(i, r):
        sl = [slice(None)] * 3
        sl[i] = -1 if r else 0
        out = np.expand_dims(v[tuple(sl)], i)
        return out

    def edge(i, r, s):
        j, k = [d for d in range(3) if d != i]
        sl = [slice(None)] * 3
        sl[j] = -1 if r else 0
        sl[k] = -1 if s else 0
        return np.expand_dims(np.expand_dims(v[tuple(sl)], j if j < k else k), k if j < k else j)

    out = np.zeros_like(v)
    for i in range(3):
        j, k = [d for d in range(3) if d != i]
        for r in (0, 1):
            out += _ell(T[i], r) * face(i, r)
            for s in (0, 1):
                out -= _ell(T[j], r) * _ell(T[k], s) * edge(i, r, s)
    for r in (0, 1):
        for s in (0, 1):
            for q in (0, 1):
                out += (_ell(T[0], r) * _ell(T[1], s) * _ell(T[2], q)
                        * v[-1 if r else 0, -1 if s else 0, -1 if q else 0])
    return out


# discrete operators ----------------------------------------------------------

def laplacian_15pt(u, h, stencil=STENCIL_15):
    """Fourth-order (up to (h^2/12) Lap^2 u) Laplacian at interior nodes."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0] - 1
    out = np.zeros((n - 1, n - 1, n - 1) + u.shape[3:])
    for (a, b, c), w in stencil:
        out += w * u[1 + a:n + a, 1 + b:n + b, 1 + c:n + c]
    return out / (h * h)


def stencil_symbol(n, h, stencil=STENCIL_15):
    """Eigenvalues of the Dirichlet stencil on sine modes sin(k pi i / n), k = 1..n-1."""
    theta = np.pi * np.arange(1, n) / n
    cos = [np.cos(o * theta) for o in (0, 1)]
    lam = 0.0
    for off, w in stencil:
        term = w
        for d, o in enumerate(off):
            shape = [1, 1, 1]
            shape[d] = n - 1
            term = term * cos[abs(o)].reshape(shape)
        lam = lam + term
    lam = lam / (h * h)
    if not np.all(lam < 0):
        raise ArithmeticError("stencil symbol must be negative on all interior modes")
    return lam


def dst_poisson_solve(F, h, stencil=STENCIL_15):
    """v with Lap_h v = F on interior nodes and v = 0 on the boundary."""
    F = np.asarray(F, dtype=float)
    lam = stencil_symbol(F.shape[0] + 1, h, stencil)
    if F.ndim == 4:
        return np.stack([dst_poisson_solve(F[..., c], h, stencil) for c in range(F.shape[3])], axis=-1)
    Fh = dstn(F, type=1, norm="ortho")
    return dstn(Fh / lam, type=1, norm="ortho")


def embed_interior(v):
    """Interior array (n-1)^3 to a node array with zero boundary."""
    n = v.shape[0] + 1
    out = np.zeros((n + 1, n + 1, n + 1) + v.shape[3:])
    out[1:n, 1:n, 1:n] = v
    return out


_SYM = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_ONE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_ONE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _diff4(u, h, d):
    u = np.moveaxis(u, d, 0)
    m = u.shape[0]
    out = np.empty_like(u)
    out[2:m - 2] = sum(_SYM[k] * u[k:m - 4 + k] for k in range(5) if _SYM[k] != 0.0)
    out[0] = sum(_ONE0[k] * u[k] for k in range(5))
    out[1] = sum(_ONE1[k] * u[k] for k in range(5))
    out[m - 1] = -sum(_ONE0[k] * u[m - 1 - k] for k in range(5))
    out[m - 2] = -sum(_ONE1[k] * u[m - 1 - k] for k in range(5))
    return np.moveaxis(out / h, 0, d)


def gradient_4th(u, h):
    """Fourth-order gradient on all nodes: symmetric inside, one-sided at the faces."""
    u = np.asarray(u, dtype=float)
    if min(u.shape[:3]) < 5:
        raise ValueError("at least 5 nodes per direction are needed")
    return np.stack([_diff4(u, h, d) for d in range(3)], axis=-1)


def forward_difference(u, h, d=0):
    """(u(x + h e_d) - u(x))/h on nodes with a right neighbour."""
    u = np.moveaxis(np.asarray(u, dtype=float), d, 0)
    return np.moveaxis((u[1:] - u[:-1]) / h, 0, d)


# surface bands ---------------------------------------------------------------

@dataclass
class BandMask:
    """Signed distances of nodes near the surface and derived flags."""

    index: np.ndarray      # flat node indices with |b| <= width
    b: np.ndarray
    x0: np.ndarray
    n0: np.ndarray
    width: float
    inside: np.ndarray = field(repr=False, default=None)  # bool node array, phi < 0

    def near(self, width):
        return self.index[np.abs(self.b) <= width]

    def stencil_band(self, h, width=2.0):
        return self.near(width * h + 1e-12 * h)


def surface_band(grid, surface, width, rel_tol=1e-10, seed_points=None):
    """Nodes within distance ``width`` of the surface, with closest points.

    ``seed_points`` (surface samples, e.g. quadrature nodes) make the
    projection robust where the surface is strongly curved.
    """
    ax = [grid.axis(d) for d in range(3)]
    inside = np.zeros(grid.shape, dtype=bool)
    cand = []
    start = 0
    for G in grid_slabs(ax, 0):
        ns = G.shape[0]
        P = G.reshape(-1, 3)
        phi = surface.phi(P)
        inside[start:start + ns] = (phi < 0).reshape(G.shape[:3])
        with np.errstate(divide="ignore", invalid="ignore"):
            est = np.abs(phi) / np.maximum(np.linalg.norm(surface.grad(P), axis=-1), 1e-300)
        idx = np.flatnonzero(est <= 1.5 * width + grid.h)
        cand.append(idx + start * (grid.n + 1) ** 2)
        start += ns
    cand = np.concatenate(cand)
    cp = closest_point(surface, grid.points(cand), seed_points=seed_points)
    keep = np.abs(cp.b) <= width
    b = np.where(np.abs(cp.b) <= rel_tol * surface.diameter, 0.0, cp.b)
    return BandMask(cand[keep], b[keep], cp.x0[keep], cp.n0[keep], width, inside)


def band_targets(grid, band, width):
    """TargetSet for band nodes within ``width``.

    Nodes on the surface (b = 0) take the exterior limit, matching the
    classification phi >= 0 used for exact values and for the body interior.
    """
    sel = np.abs(band.b) <= width
    idx = band.index[sel]
    kind = np.full(len(idx), ev.NEAR, dtype=np.int8)
    return idx, ev.TargetSet(grid.points(idx), kind, band.x0[sel], band.b[sel], band.n0[sel])


def far_targets(points):
    n = len(points)
    z = np.zeros((n, 3))
    return ev.TargetSet(np.asarray(points, float), np.zeros(n, dtype=np.int8), z, np.zeros(n), z)


# grid IO ---------------------------------------------------------------------

_MAGIC = b"LRGRID01"
_HEADER = struct.Struct("<8s4q4d")


def write_grid(path, grid, values=None):
    """Binary file: magic, ncomp, dims(3), h, origin(3); then float64 node values
    in C order over (i, j, k) with components last."""
    v = np.asarray(grid.values if values is None else values, dtype="<f8")
    dims = v.shape[:3]
    ncomp = 1 if v.ndim == 3 else v.shape[3]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, ncomp, *dims, grid.h, *grid.origin))
        fh.write(np.ascontiguousarray(v).tobytes())


def read_grid(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, ncomp, n0, n1, n2, h, o0, o1, o2 = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a grid file")
        data = np.frombuffer(fh.read(), dtype="<f8")
    shape = (n0, n1, n2) if ncomp == 1 else (n0, n1, n2, ncomp)
    data = data.reshape(shape).copy()
    L = h * (n0 - 1)
    return CubeGrid(h, L, (o0, o1, o2), data)


def write_plane_csv(path, grid, values, axis=2, coord=None, names=None):
    """Slice at the node plane nearest ``coord`` along ``axis`` (default: middle)."""
    v = np.asarray(values, dtype=float)
    if coord is None:
        k = grid.n // 2
    else:
        k = int(round((coord - grid.origin[axis]) / grid.h))
    sl = np.take(v, k, axis=axis)
    other = [d for d in range(3) if d != axis]
    A, B = np.meshgrid(grid.axis(other[0]), grid.axis(other[1]), indexing="ij")
    comps = sl.reshape(A.size, -1)
    names = names or (["value"] if comps.shape[1] == 1 else [f"value_{c}" for c in range(comps.shape[1])])
    lab = "xyz"
    data = np.column_stack([A.reshape(-1), B.reshape(-1), comps])
    header = ",".join([lab[other[0]], lab[other[1]]] + list(names))
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


# pipelines -------------------------------------------------------------------

HARMONIC_CENTER = (1.5, 1.5, 1.5)


def harmonic_exact(center=HARMONIC_CENTER):
    """Test problem: u- = (sin z1 + sin z2) exp(z3), u+ = 1/|z|, z = y - center."""
    c = np.asarray(center, dtype=float)

    def u_in(y):
        z = y - c
        return (np.sin(z[:, 0]) + np.sin(z[:, 1])) * np.exp(z[:, 2])

    def grad_in(y):
        z = y - c
        e = np.exp(z[:, 2])
        return np.stack([np.cos(z[:, 0]) * e, np.cos(z[:, 1]) * e,
                         (np.sin(z[:, 0]) + np.sin(z[:, 1])) * e], axis=1)

    def u_out(y):
        return 1.0 / np.linalg.norm(y - c, axis=1)

    def grad_out(y):
        z = y - c
        return -z / np.linalg.norm(z, axis=1)[:, None] ** 3

    return u_in, grad_in, u_out, grad_out


@dataclass
class PipelineResult:
    grid: CubeGrid
    fields: dict
    info: dict


def _fill(grid, index, vals, base=None):
    shape = grid.shape + np.shape(vals)[1:]
    out = np.zeros(shape) if base is None else base
    flat = out.reshape((-1,) + np.shape(vals)[1:])
    flat[index] = vals
    return out


def _assemble_rhs(grid, band, u_int_nodes, w, elsewhere=None, stencil_width=2.0):
    """F_h = Lap_h u_int - Lap_h w on the stencil band, elsewhere - Lap_h w (+ elsewhere)."""
    n = grid.n
    h = grid.h
    Lw = laplacian_15pt(w, h)
    F = -Lw if elsewhere is None else elsewhere - Lw
    sb = band.stencil_band(h, stencil_width)
    i, j, k = np.unravel_index(sb, grid.shape)
    ok = (i > 0) & (i < n) & (j > 0) & (j < n) & (k > 0) & (k < n)
    i, j, k = i[ok], j[ok], k[ok]
    Lu = 0.0
    for (a, b_, c), wt in STENCIL_15:
        Lu = Lu + wt * u_int_nodes[i + a, j + b_, k + c]
    Lu = Lu / (h * h)
    F[i - 1, j - 1, k - 1] = Lu - Lw[i - 1, j - 1, k - 1]
    return F


def harmonic_pipeline(surface, f, g, h, cfg, exact_fields=None, L=3.0, band_width=4.0,
                      stencil_width=2.0, backend=None):
    """Grid solution u_h of the interface problem from layer densities f, g.

    ``exact_fields`` (callables u_in, u_out) are used only to report errors.
    """
    t0 = time.perf_counter()
    grid = CubeGrid(h, L)
    quad = build_quadrature(surface, h)
    fd = ev.LayerDensity.from_field(quad, f) if callable(f) else f
    gd = ev.LayerDensity.from_field(quad, g) if callable(g) else g
    # 1. boundary values by plain quadrature, 2. extension
    bidx = grid.boundary_index()
    S, D = ev.eval_harmonic_layers(quad, fd, gd, far_targets(grid.points(bidx)), cfg, backend=backend)
    ub = _fill(grid, bidx, S + D)
    w = extend_grid_boundary(ub)
    # 3. regularized integrals in the band
    band = surface_band(grid, surface, band_width * h, seed_points=quad.x)
    idx, T = band_targets(grid, band, band_width * h)
    S, D = ev.eval_harmonic_layers(quad, fd, gd, T, cfg, backend=backend)
    u_int = _fill(grid, idx, S + D)
    # 4.-5. right side and sine-transform solve
    F = _assemble_rhs(grid, band, u_int, w, stencil_width=stencil_width)
    u_h = embed_interior(dst_poisson_solve(F, h)) + w
    info = {"n_band": len(idx), "n_nodes": len(quad), "delta": cfg.delta(h),
            "seconds": time.perf_counter() - t0}
    fields = {"u": u_h, "du_x": forward_difference(u_h, h, 0)}
    if exact_fields is not None:
        u_in, u_out = exact_fields
        P = grid.points()
        ins = band.inside.reshape(-1)
        ue = np.empty(len(P))
        ue[ins] = u_in(P[ins])
        ue[~ins] = u_out(P[~ins])
        ue = ue.reshape(grid.shape)
        err = u_h - ue
        derr = forward_difference(err, h, 0)
        ie = np.abs(u_int.reshape(-1)[idx] - ue.reshape(-1)[idx])
        info.update(err_u=_norms(err), err_du=_norms(derr), err_int=_norms(ie))
        fields["u_exact"] = ue
    return PipelineResult(grid, fields, info)


def _norms(e, axis=None):
    e = np.asarray(e, dtype=float)
    if axis is not None:
        e = np.linalg.norm(e, axis=axis)
    e = np.abs(e).reshape(-1)
    return float(e.max()), float(np.sqrt(np.mean(e * e)))


STOKES_CENTER = (1.5, 1.5, 1.5)
STOKES_AXES = (1.0, 0.5, 0.5)


def stokes_pipeline(surface, force, U, h, cfg, exact=None, L=3.0, band_width=4.0,
                    stencil_width=2.0, backend=None):
    """Pressure, pressure gradient, velocity and velocity differences on the grid.

    ``force(x, n)`` is the surface force on the fluid, ``U`` the body velocity.
    ``exact`` (pressure(y), velocity(y) callables) is used only to report errors.
    """
    t0 = time.perf_counter()
    U = np.asarray(U, dtype=float)
    grid = CubeGrid(h, L)
    quad = build_quadrature(surface, h)
    fd = ev.LayerDensity.from_field(quad, force) if callable(force) else force
    bidx = grid.boundary_index()
    Tb = far_targets(grid.points(bidx))
    band = surface_band(grid, surface, band_width * h, seed_points=quad.x)
    idx, T = band_targets(grid, band, band_width * h)
    ext = T.b >= 0
    inside = band.inside
    # stage 1: pressure, zero inside the body
    pb = ev.eval_pressure(quad, fd, Tb, cfg, backend=backend)
    w = extend_grid_boundary(_fill(grid, bidx, pb))
    Te = T.subset(ext)
    p_int = _fill(grid, idx[ext], ev.eval_pressure(quad, fd, Te, cfg, backend=backend))
    F = _assemble_rhs(grid, band, p_int, w, stencil_width=stencil_width)
    p_h = embed_interior(dst_poisson_solve(F, h)) + w
    del F
    gp = gradient_4th(p_h, h)
    t1 = time.perf_counter()
    # stage 2: velocity, constant U inside the body
    ubv = ev.eval_stokes_single(quad, fd, Tb, cfg, backend=backend)
    w = extend_grid_boundary(_fill(grid, bidx, ubv))
    u_int = np.zeros(grid.shape + (3,))
    u_int[inside] = U
    u_int = _fill(grid, idx[ext], ev.eval_stokes_single(quad, fd, Te, cfg, backend=backend), u_int)
    u_h = np.empty(grid.shape + (3,))
    for c in range(3):
        F = _assemble_rhs(grid, band, u_int[..., c], w[..., c],
                          elsewhere=gp[1:-1, 1:-1, 1:-1, c], stencil_width=stencil_width)
        u_h[..., c] = embed_interior(dst_poisson_solve(F, h)) + w[..., c]
    del F
    gu = np.stack([gradient_4th(u_h[..., c], h) for c in range(3)], axis=-2)
    info = {"n_band": len(idx), "n_nodes": len(quad), "delta": cfg.delta(h),
            "seconds_pressure": t1 - t0, "seconds": time.perf_counter() - t0}
    fields = {"p": p_h, "grad_p": gp, "u": u_h, "grad_u": gu}
    if exact is not None:
        pex, uex = exact
        P = grid.points()
        outside = ~inside.reshape(-1)
        pe = pex(P).reshape(grid.shape)
        ue = uex(P).reshape(grid.shape + (3,))
        mask = outside.reshape(grid.shape)
        gue = np.stack([gradient_4th(ue[..., c], h) for c in range(3)], axis=-2)
        ep = (p_h - pe)[mask]
        eu = np.linalg.norm(u_h - ue, axis=-1)[mask]
        eg = np.linalg.norm((gu - gue).reshape(grid.shape + (9,)), axis=-1)
        pint = np.abs(p_int.reshape(-1)[idx[ext]] - pe.reshape(-1)[idx[ext]])
        uint = np.linalg.norm(u_int.reshape(-1, 3)[idx[ext]] - ue.reshape(-1, 3)[idx[ext]], axis=1)
        info.update(err_p=_norms(ep), err_u=_norms(eu), err_grad_u=_norms(eg),
                    err_p_int=_norms(pint), err_u_int=_norms(uint))
        fields["p_exact"] = pe
        fields["u_exact"] = ue
    return PipelineResult(grid, fields, info)


def divergence(u, h):
    """Fourth-order divergence of a node vector field."""
    return sum(_diff4(u[..., d], h, d) for d in range(3))


# experiment drivers ----------------------------------------------------------

def harmonic_problem(h, cfg=None, **kw):
    surf = MolecularSurface(center=HARMONIC_CENTER)
    u_in, grad_in, u_out, grad_out = harmonic_exact()
    cfg = cfg or RegConfig.from_kappa(1.0, q=5.0 / 7.0, p=7)

    def f(x, n):
        return np.sum((grad_out(x) - grad_in(x)) * n, axis=1)

    def g(x, n):
        return u_in(x) - u_out(x)

    return harmonic_pipeline(surf, f, g, h, cfg, exact_fields=(u_in, u_out), **kw)


def stokes_problem(h, cfg=None, **kw):
    from .spheroid_flow import TranslatingSpheroid

    surf = Ellipsoid(STOKES_AXES, center=STOKES_CENTER)
    flow = TranslatingSpheroid(surf)
    cfg = cfg or RegConfig(p=7, q=5.0 / 7.0, kappa0=4.0)
    return stokes_pipeline(surf, flow.force_density, flow.velocity, h, cfg,
                           exact=(flow.pressure, flow.velocity_at), **kw)


GRID_KEYS = {"grid-harmonic": ("err_int", "err_u", "err_du"),
             "grid-stokes": ("err_p_int", "err_u_int", "err_p", "err_u", "err_grad_u")}


def run_grid_experiment(spec):
    """One ErrorReport per reported quantity over the h ladder of ``spec``."""
    import os
    from .experiments import ErrorReport, LevelResult

    keys = GRID_KEYS[spec.name]
    reports = {k: ErrorReport(f"{spec.name}:{k[4:]}", spec.cfg, spec.seed) for k in keys}
    harmonic = spec.name == "grid-harmonic"
    for h in spec.h_list:
        t0 = time.perf_counter()
        res = (harmonic_problem if harmonic else stokes_problem)(h, spec.cfg)
        dt = time.perf_counter() - t0
        for k in keys:
            emax, el2 = res.info[k]
            reports[k].levels.append(LevelResult(h, spec.cfg.delta(h), res.info["n_band"],
                                                 emax, el2, dt))
        if spec.out:
            os.makedirs(spec.out, exist_ok=True)
            tag = f"{spec.name}_h{round(1 / h)}"
            for name, arr in res.fields.items():
                if name.endswith("exact"):
                    continue
                write_grid(os.path.join(spec.out, f"{tag}_{name}.bin"), res.grid, arr)
            main = "u" if harmonic else "p"
            err = res.fields[main] - res.fields[f"{main}_exact"]
            write_plane_csv(os.path.join(spec.out, f"{tag}_{main}_error_plane.csv"), res.grid,
                            np.abs(err), axis=1, coord=1.5, names=[f"{main}_abs_error"])
            if not harmonic:
                eu = np.linalg.norm(res.fields["u"] - res.fields["u_exact"], axis=-1)
                write_plane_csv(os.path.join(spec.out, f"{tag}_u_error_plane.csv"), res.grid,
                                eu, axis=1, coord=1.5, names=["u_abs_error"])
        del res
    return list(reports.values())
