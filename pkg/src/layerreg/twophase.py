"""Interface velocity of two drops in Stokes flow driven by surface tension.

Second-kind equation at nodes x0 of surface b:

    (lam_b + 1) u(x0) = -2/mu0 sum_m SL_m[f_m](x0) + 2 sum_m (lam_m - 1) DL_m[u](x0)

with SL = (1/8pi) int S f and DL = (1/8pi) int T u n, the jump [f] in the
surface force as density.  Self terms use the on-surface factors, cross terms
the near-surface factors when b/delta <= cutoff and plain kernels otherwise.
"""
from dataclasses import dataclass, field
import csv
import math
import os
import time

import numpy as np
from scipy.sparse import csr_matrix
from scipy.spatial import cKDTree

from . import evaluators as ev
from .quadrature import build_quadrature
from .regularization import RegConfig
from .surfaces import Ellipsoid, normal_and_curvature, rotation_z, surface_gradient


class GMRESError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def gmres(matvec, b, tol=1e-10, max_iter=200, x0=None):
    """Unrestarted GMRES; modified Gram-Schmidt with one reorthogonalization.

    Returns (x, history) where history holds relative residual norms, starting
    with the initial one.  Raises GMRESError if tol is not reached.
    """
    b = np.asarray(b, dtype=float)
    n = len(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), [0.0]
    beta = np.linalg.norm(r)
    hist = [beta / bnorm]
    if hist[0] <= tol:
        return x, hist
    m = min(max_iter, n)
    V = np.zeros((m + 1, n))
    H = np.zeros((m + 1, m))
    cs = np.zeros(m)
    sn = np.zeros(m)
    g = np.zeros(m + 1)
    g[0] = beta
    V[0] = r / beta
    k = 0
    for k in range(m):
        w = matvec(V[k])
        for _ in range(2):
            for i in range(k + 1):
                c = np.dot(V[i], w)
                H[i, k] += c
                w -= c * V[i]
        H[k + 1, k] = np.linalg.norm(w)
        breakdown = H[k + 1, k] == 0.0
        if not breakdown:
            V[k + 1] = w / H[k + 1, k]
        for i in range(k):
            t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
            H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
            H[i, k] = t
        d = math.hypot(H[k, k], H[k + 1, k])
        cs[k], sn[k] = H[k, k] / d, H[k + 1, k] / d
        H[k, k] = d
        H[k + 1, k] = 0.0
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]
        hist.append(abs(g[k + 1]) / bnorm)
        if hist[-1] <= tol or breakdown:
            break
    kk = k + 1
    y = np.linalg.solve(np.triu(H[:kk, :kk]), g[:kk])
    x = x + V[:kk].T @ y
    if hist[-1] > tol:
        raise GMRESError(f"GMRES stopped at relative residual {hist[-1]:.3e} after {kk} steps", hist)
    return x, hist


def surface_force_jump(surface, gamma, grad_gamma, x):
    """[f] = 2 gamma H n - grad_S gamma at surface points x."""
    n, H = normal_and_curvature(surface, x)
    return 2.0 * (gamma(x) * H)[:, None] * n - surface_gradient(grad_gamma, surface, x)


def tension_about_center(zc):
    """gamma = 1 + (z - zc)^2 and its gradient."""
    def gamma(x):
        return 1.0 + (x[:, 2] - zc) ** 2

    def grad(x):
        out = np.zeros_like(x)
        out[:, 2] = 2.0 * (x[:, 2] - zc)
        return out

    return gamma, grad


def mls_matrix(nodes, normals_at, points, normals, h, k=16):
    """Sparse rows interpolating node values to surface points.

    Weighted least squares with a quadratic in tangent-plane coordinates at
    each point, Gaussian weights of width 2h over the k nearest nodes.
    """
    nodes = np.asarray(nodes, float)
    points = np.asarray(points, float)
    k = min(k, len(nodes))
    dist, nb = cKDTree(nodes).query(points, k=k)
    n = np.asarray(normals, float)
    a = np.where(np.abs(n[:, 0]) < 0.9, 1.0, 0.0)
    ref = np.stack([a, 1.0 - a, np.zeros(len(n))], axis=1)
    t1 = np.cross(n, ref)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(n, t1)
    d = nodes[nb] - points[:, None, :]
    u = np.sum(d * t1[:, None, :], axis=-1) / h
    v = np.sum(d * t2[:, None, :], axis=-1) / h
    V = np.stack([np.ones_like(u), u, v, u * u, u * v, v * v], axis=-1)
    wt = np.exp(-(dist / (2.0 * h)) ** 2)
    A = np.einsum("pk,pki,pkj->pij", wt, V, V)
    rhs = np.zeros((len(points), 6))
    rhs[:, 0] = 1.0
    c = np.linalg.solve(A, rhs[..., None])[..., 0]
    rows = np.einsum("pi,pki->pk", c, V) * wt
    return csr_matrix((rows.reshape(-1), nb.reshape(-1),
                       np.arange(0, len(points) * k + 1, k)), shape=(len(points), len(nodes)))


@dataclass
class Interface:
    surface: object
    lam: float
    gamma: object
    grad_gamma: object

    def force_jump(self, x, n=None):
        return surface_force_jump(self.surface, self.gamma, self.grad_gamma, x)


@dataclass
class TwoPhaseProblem:
    interfaces: list
    mu0: float = 1.0
    check_disjoint: bool = True

    def __post_init__(self):
        for it in self.interfaces:
            if it.lam <= 0:
                raise ValueError("viscosity ratios must be positive")
        if self.check_disjoint:
            self._check_disjoint()

    def _check_disjoint(self, n=40):
        th, ph = np.meshgrid(np.linspace(0, math.pi, n), np.linspace(0, 2 * math.pi, 2 * n))
        for i, a in enumerate(self.interfaces):
            for j, b in enumerate(self.interfaces):
                if i == j or not isinstance(a.surface, Ellipsoid):
                    continue
                pts = a.surface.parametric(th.reshape(-1), ph.reshape(-1))
                if np.any(b.surface.phi(pts) < 0):
                    raise ValueError(f"surfaces {i} and {j} intersect")


def spheroid_pair(eps=1.0 / 16 ** 3, lam=2.0, axes=(1.0, 0.5, 0.5), angle=30.0):
    """Lower spheroid centred at (0,0,-1/2-eps), upper at (0,0,1/2) rotated about z."""
    lower = Ellipsoid(axes, center=(0.0, 0.0, -0.5 - eps))
    upper = Ellipsoid(axes, center=(0.0, 0.0, 0.5), rotation=rotation_z(angle))
    its = [Interface(s, lam, *tension_about_center(s.center[2])) for s in (lower, upper)]
    return TwoPhaseProblem(its)


class Discretization:
    """Quadratures, target classifications and interpolation for one (h, cfg)."""

    def __init__(self, problem, h, cfg, backend=None):
        self.problem = problem
        self.h = h
        self.cfg = cfg
        self.delta = cfg.delta(h)
        self.backend = backend
        self.quads = [build_quadrature(it.surface, h) for it in problem.interfaces]
        self.sizes = [len(q) for q in self.quads]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.forces = [ev.LayerDensity.from_field(q, it.force_jump)
                       for q, it in zip(self.quads, problem.interfaces)]
        self.self_targets = [ev.surface_targets(q) for q in self.quads]
        self.cross = {}
        for b, qb in enumerate(self.quads):
            for m, it in enumerate(problem.interfaces):
                if m == b:
                    continue
                self.cross[b, m] = self._cross_targets(qb.x, m)

    def _cross_targets(self, y, m):
        T = ev.make_targets(self.problem.interfaces[m].surface, y, self.delta, self.cfg.cutoff)
        near = T.kind == ev.NEAR
        W = None
        if near.any():
            qm = self.quads[m]
            W = mls_matrix(qm.x, qm.n, T.x0[near], T.n0[near], self.h)
        return T, near, W

    @property
    def n_unknowns(self):
        return 3 * int(self.offsets[-1])

    def split(self, flat):
        u = np.asarray(flat, float).reshape(-1, 3)
        return [u[self.offsets[i]:self.offsets[i + 1]] for i in range(len(self.quads))]

    def rhs(self):
        out = []
        for b, qb in enumerate(self.quads):
            acc = np.zeros((len(qb), 3))
            for m, qm in enumerate(self.quads):
                T = self.self_targets[b] if m == b else self.cross[b, m][0]
                acc += ev.eval_stokes_single(qm, self.forces[m], T, self.cfg, self.delta,
                                             backend=self.backend)
            out.append(-2.0 / self.problem.mu0 * acc)
        return np.concatenate(out).reshape(-1)

    def double_layers(self, parts, targets_for, q0_for):
        """sum_m 2 (lam_m - 1) DL_m[u_m] at the given target sets."""
        res = []
        for b in range(len(targets_for)):
            acc = 0.0
            for m, qm in enumerate(self.quads):
                c = 2.0 * (self.problem.interfaces[m].lam - 1.0)
                if c == 0.0:
                    continue
                T = targets_for[b][m]
                dens = ev.LayerDensity(qm, parts[m])
                acc = acc + c * ev.eval_stokes_double(qm, dens, T, self.cfg, self.delta,
                                                      backend=self.backend, q0=q0_for(b, m, parts))
            res.append(acc)
        return res

    def _targets(self):
        return [[self.self_targets[b] if m == b else self.cross[b, m][0]
                 for m in range(len(self.quads))] for b in range(len(self.quads))]

    def _q0(self, b, m, parts):
        if m == b:
            return parts[m]
        T, near, W = self.cross[b, m]
        q0 = np.zeros((len(T), 3))
        if W is not None:
            q0[near] = W @ parts[m]
        return q0

    def apply(self, flat):
        parts = self.split(flat)
        dl = self.double_layers(parts, self._targets(), self._q0)
        out = [(self.problem.interfaces[b].lam + 1.0) * parts[b] - np.asarray(dl[b])
               for b in range(len(parts))]
        return np.concatenate(out).reshape(-1)


def apply_operator(disc, u):
    return disc.apply(u)


@dataclass
class Solution:
    disc: Discretization
    u: list
    history: list
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.history) - 1


def solve_interface_velocity(problem, h, cfg, tol=1e-10, max_iter=200, backend=None):
    t0 = time.perf_counter()
    disc = Discretization(problem, h, cfg, backend)
    b = disc.rhs()
    if all(it.lam == 1.0 for it in problem.interfaces):
        x = b / 2.0
        hist = [0.0]
    else:
        x, hist = gmres(disc.apply, b, tol=tol, max_iter=max_iter)
    return Solution(disc, disc.split(x), hist, time.perf_counter() - t0)


def fibonacci_points(surface, n):
    """Quasi-uniform points on an ellipsoid: a Fibonacci sphere mapped by the axes."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    theta = np.arccos(z)
    return surface.parametric(theta, phi)


def representation_at(sol, points):
    """Velocity at arbitrary surface points from the discrete equation.

    At a point s of surface b the self double layer is split into its
    unsubtracted sum and the 3x3 matrix M(s) = DL of the unit densities, so
    that [(lam_b + 1) I - c_b (I/2 - M)] u(s) = rhs(s) + c_b DL_b[u](s) + cross.
    At a node this reproduces the equation solved by GMRES.
    """
    disc = sol.disc
    cfg, delta = disc.cfg, disc.delta
    out = []
    for b, y in enumerate(points):
        it = disc.problem.interfaces[b]
        surf = it.surface
        n0 = surf.normal(y)
        Ton = ev.TargetSet(y.copy(), np.full(len(y), ev.ON, dtype=np.int8), y.copy(),
                           np.zeros(len(y)), n0)
        rhs = np.zeros((len(y), 3))
        dl = np.zeros((len(y), 3))
        for m, qm in enumerate(disc.quads):
            cm = 2.0 * (disc.problem.interfaces[m].lam - 1.0)
            if m == b:
                fd = ev.LayerDensity(qm, disc.forces[m].values, disc.forces[m].field)
                rhs += ev.eval_stokes_single(qm, fd, Ton, cfg, delta, backend=disc.backend)
                if cm != 0.0:
                    zero = np.zeros((len(y), 3))
                    dl += cm * (ev.eval_stokes_double(qm, ev.LayerDensity(qm, sol.u[m]), Ton, cfg,
                                                      delta, backend=disc.backend, q0=zero))
            else:
                T, near, W = disc._cross_targets(y, m)
                rhs += ev.eval_stokes_single(qm, disc.forces[m], T, cfg, delta, backend=disc.backend)
                if cm != 0.0:
                    q0 = np.zeros((len(y), 3))
                    if W is not None:
                        q0[near] = W @ sol.u[m]
                    dl += cm * ev.eval_stokes_double(qm, ev.LayerDensity(qm, sol.u[m]), T, cfg,
                                                     delta, backend=disc.backend, q0=q0)
        rhs *= -2.0 / disc.problem.mu0
        cb = 2.0 * (it.lam - 1.0)
        M = np.zeros((len(y), 3, 3))
        if cb != 0.0:
            qb = disc.quads[b]
            zero = np.zeros((len(y), 3))
            for j in range(3):
                e = np.zeros((len(qb), 3))
                e[:, j] = 1.0
                M[:, :, j] = ev.eval_stokes_double(qb, ev.LayerDensity(qb, e), Ton, cfg, delta,
                                                   backend=disc.backend, q0=zero)
        A = (it.lam + 1.0) * np.eye(3)[None] - cb * (0.5 * np.eye(3)[None] - M)
        out.append(np.linalg.solve(A, (rhs + dl)[..., None])[..., 0])
    return out


def self_convergence_error(u_coarse, u_fine, mask=None):
    """(max, L2) of |u_coarse - u_fine| over sample points (lists per surface)."""
    d = np.concatenate([np.asarray(a) - np.asarray(b) for a, b in zip(u_coarse, u_fine)])
    mag = np.linalg.norm(d.reshape(len(d), -1), axis=1)
    if mask is not None:
        mag = mag[np.asarray(mask)]
    return float(mag.max()), float(np.sqrt(np.mean(mag ** 2)))


def near_touching_mask(problem, points, radius=0.1):
    """Sample points within ``radius`` of another interface."""
    masks = []
    for b, y in enumerate(points):
        m = np.zeros(len(y), dtype=bool)
        for j, it in enumerate(problem.interfaces):
            if j == b:
                continue
            est = ev.make_targets(it.surface, y, radius, 1.0)
            m |= est.kind == ev.NEAR
        masks.append(m)
    return np.concatenate(masks)


def write_solution_csv(path, sol):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["surface", "x", "y", "z", "u1", "u2", "u3"])
        for s, (q, u) in enumerate(zip(sol.disc.quads, sol.u)):
            for xi, ui in zip(q.x, u):
                w.writerow([s] + [repr(float(v)) for v in xi] + [repr(float(v)) for v in ui])


def write_history_csv(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "relative_residual"])
        for i, r in enumerate(history):
            w.writerow([i, repr(float(r))])


N_SAMPLES = 2000


def run_two_spheroids(spec):
    """Self-convergence study; one report for the velocity on both surfaces."""
    from .experiments import ErrorReport, LevelResult

    eps = float(spec.options.get("eps", 1.0 / 16 ** 3))
    nsamp = int(spec.options.get("samples", N_SAMPLES))
    prob = spheroid_pair(eps=eps)
    pts = [fibonacci_points(it.surface, nsamp) for it in prob.interfaces]
    touch = near_touching_mask(prob, pts)
    values, sols = [], []
    for h in spec.h_list:
        sol = solve_interface_velocity(prob, h, spec.cfg)
        values.append(representation_at(sol, pts))
        sols.append((h, sol.iterations, sol.seconds, sol.history))
        if spec.out:
            os.makedirs(spec.out, exist_ok=True)
            tag = f"two-spheroids_h{round(1 / h)}"
            write_solution_csv(os.path.join(spec.out, f"{tag}_solution.csv"), sol)
            write_history_csv(os.path.join(spec.out, f"{tag}_residuals.csv"), sol.history)
        del sol
    rep = ErrorReport("two-spheroids", spec.cfg, spec.seed)
    for i in range(len(values) - 1):
        h, iters, secs, _ = sols[i]
        emax, el2 = self_convergence_error(values[i], values[i + 1])
        tmax, _ = self_convergence_error(values[i], values[i + 1], touch)
        rmax, _ = self_convergence_error(values[i], values[i + 1], ~touch)
        rep.levels.append(LevelResult(h, spec.cfg.delta(h), 2 * nsamp, emax, el2, secs))
        rep.extra.setdefault("touch_max", []).append(tmax)
        rep.extra.setdefault("rest_max", []).append(rmax)
    rep.extra["iterations"] = [s[1] for s in sols]
    rep.extra["eps"] = eps
    return [rep]
