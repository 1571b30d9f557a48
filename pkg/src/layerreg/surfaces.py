"""Implicit closed surfaces with analytic first and second derivatives.

All level-set functions are positive outside and negative inside, so the
outward normal is grad(phi)/|grad(phi)| and the signed distance returned by
:func:`closest_point` is positive outside.
"""
from dataclasses import dataclass
import math

import numpy as np


class ProjectionError(RuntimeError):
    pass


class DegenerateGradientError(ValueError):
    pass


class Surface:
    """Base class; subclasses implement ``phi``, ``grad`` and ``hess``."""

    kind = "abstract"

    def phi(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def hess(self, x):
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError

    @property
    def diameter(self):
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def normal(self, x):
        g = self.grad(x)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)


class Sphere(Surface):
    kind = "sphere"

    def __init__(self, radius=1.0, center=(0.0, 0.0, 0.0)):
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)

    def phi(self, x):
        return np.linalg.norm(np.asarray(x) - self.center, axis=-1) - self.radius

    def grad(self, x):
        d = np.asarray(x) - self.center
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def hess(self, x):
        d = np.asarray(x) - self.center
        r = np.linalg.norm(d, axis=-1)[..., None, None]
        n = d / r[..., 0]
        return (np.eye(3) - n[..., :, None] * n[..., None, :]) / r

    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    def area(self):
        return 4.0 * math.pi * self.radius ** 2


def rotation_z(degrees):
    t = math.radians(degrees)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class Ellipsoid(Surface):
    """phi(x) = sum_i (x'_i/a_i)^2 - 1 with x' = R^T (x - center)."""

    kind = "ellipsoid"

    def __init__(self, semi_axes, center=(0.0, 0.0, 0.0), rotation=None):
        self.semi_axes = np.asarray(semi_axes, dtype=float)
        self.center = np.asarray(center, dtype=float)
        self.rotation = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        if not np.allclose(self.rotation @ self.rotation.T, np.eye(3), atol=1e-12):
            raise ValueError("rotation must be orthogonal")
        self._inv_a2 = 1.0 / self.semi_axes ** 2

    def to_body(self, x):
        return (np.asarray(x) - self.center) @ self.rotation

    def to_world(self, xb):
        return np.asarray(xb) @ self.rotation.T + self.center

    def phi(self, x):
        xb = self.to_body(x)
        return np.sum(xb * xb * self._inv_a2, axis=-1) - 1.0

    def grad(self, x):
        return (2.0 * self.to_body(x) * self._inv_a2) @ self.rotation.T

    def hess(self, x):
        x = np.asarray(x)
        m = self.rotation @ np.diag(2.0 * self._inv_a2) @ self.rotation.T
        return np.broadcast_to(m, x.shape[:-1] + (3, 3))

    def bbox(self):
        ext = np.sqrt(np.sum((self.rotation * self.semi_axes) ** 2, axis=1))
        return self.center - ext, self.center + ext

    def parametric(self, theta, phi_angle):
        """Point on the surface at polar/azimuthal body angles."""
        a, b, c = self.semi_axes
        xb = np.stack([a * np.sin(theta) * np.cos(phi_angle),
                       b * np.sin(theta) * np.sin(phi_angle),
                       c * np.cos(theta)], axis=-1)
        return self.to_world(xb)


MOLECULE_ATOMS = np.array([
    [math.sqrt(3.0) / 3.0, 0.0, -math.sqrt(6.0) / 12.0],
    [-math.sqrt(3.0) / 6.0, 0.5, -math.sqrt(6.0) / 12.0],
    [-math.sqrt(3.0) / 6.0, -0.5, -math.sqrt(6.0) / 12.0],
    [0.0, 0.0, math.sqrt(6.0) / 4.0],
])


class MolecularSurface(Surface):
    """Gaussian-sum surface phi(x) = c - sum_k exp(-|x - x_k|^2 / r^2)."""

    kind = "molecular"

    def __init__(self, atoms=MOLECULE_ATOMS, r=0.5, c=0.6, center=(0.0, 0.0, 0.0)):
        self.center = np.asarray(center, dtype=float)
        self.atoms = np.asarray(atoms, dtype=float) + self.center
        self.r = float(r)
        self.c = float(c)

    def _parts(self, x):
        d = np.asarray(x)[..., None, :] - self.atoms
        e = np.exp(-np.sum(d * d, axis=-1) / self.r ** 2)
        return d, e

    def phi(self, x):
        _, e = self._parts(x)
        return self.c - e.sum(axis=-1)

    def grad(self, x):
        d, e = self._parts(x)
        return np.sum((2.0 / self.r ** 2) * d * e[..., None], axis=-2)

    def hess(self, x):
        d, e = self._parts(x)
        r2 = self.r ** 2
        outer = d[..., :, None] * d[..., None, :]
        terms = e[..., None, None] * (2.0 / r2 * np.eye(3) - 4.0 / r2 ** 2 * outer)
        return terms.sum(axis=-3)

    def bbox(self):
        reach = self.r * math.sqrt(math.log(len(self.atoms) / self.c))
        return self.atoms.min(axis=0) - reach, self.atoms.max(axis=0) + reach


def level_value(surface, x):
    return surface.phi(x)


def normal_and_curvature(surface, x, grad_tol=1e-12):
    """Unit outward normal and mean curvature (unit sphere: H = +1)."""
    g = surface.grad(x)
    hs = surface.hess(x)
    gn = np.linalg.norm(g, axis=-1)
    if np.any(gn < grad_tol):
        raise DegenerateGradientError("level-set gradient vanishes")
    n = g / gn[..., None]
    trace = np.trace(hs, axis1=-2, axis2=-1)
    ghg = np.einsum("...i,...ij,...j->...", g, hs, g)
    H = (gn ** 2 * trace - ghg) / (2.0 * gn ** 3)
    return n, H


@dataclass
class ClosestPointResult:
    x0: np.ndarray
    b: np.ndarray
    n0: np.ndarray


def closest_point(surface, y, tol=1e-12, max_iter=50, seed_points=None):
    """Project points y onto the surface; signed distance b < 0 inside.

    Damped Newton on x0 - y + mu grad(phi)(x0) = 0, phi(x0) = 0, seeded by a
    few gradient steps on phi, or by the nearest of ``seed_points`` (points on
    the surface, e.g. quadrature nodes) when given.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    Y = np.atleast_2d(y)
    if isinstance(surface, Sphere):
        d = Y - surface.center
        r = np.linalg.norm(d, axis=-1)
        if np.any(r == 0):
            raise ProjectionError("projection undefined at the sphere center")
        n0 = d / r[:, None]
        x0 = surface.center + surface.radius * n0
        b = r - surface.radius
    else:
        start = None
        if seed_points is not None:
            from scipy.spatial import cKDTree

            seed_points = np.asarray(seed_points, dtype=float)
            start = seed_points[cKDTree(seed_points).query(Y)[1]]
        x0, b, n0 = _newton_project(surface, Y, tol, max_iter, start)
    if single:
        return ClosestPointResult(x0[0], float(b[0]), n0[0])
    return ClosestPointResult(x0, b, n0)


def _newton_project(surface, Y, tol, max_iter, start=None):
    x = Y.copy() if start is None else start.copy()
    for _ in range(4 if start is None else 2):
        g = surface.grad(x)
        x = x - (surface.phi(x) / np.sum(g * g, axis=-1))[:, None] * g
    g = surface.grad(x)
    mu = np.sum((Y - x) * g, axis=-1) / np.sum(g * g, axis=-1)
    scale = max(surface.diameter, 1.0)

    res, g = _residual(surface, Y, x, mu)
    active = np.ones(len(Y), dtype=bool)
    for _ in range(max_iter):
        err = np.max(np.abs(res), axis=1)
        active = err > 1e-2 * tol
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        hs = surface.hess(x[idx])
        gi = g[idx]
        J = np.zeros((len(idx), 4, 4))
        J[:, :3, :3] = np.eye(3) + mu[idx, None, None] * hs
        J[:, :3, 3] = gi
        J[:, 3, :3] = gi
        try:
            step = np.linalg.solve(J, -res[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            # medial-axis points make 1 + mu*kappa vanish; take the least-squares step
            step = (np.linalg.pinv(J) @ -res[idx][..., None])[..., 0]
        t = np.ones(len(idx))
        base = np.linalg.norm(res[idx], axis=1)
        for _ in range(8):
            xn = x[idx] + t[:, None] * step[:, :3]
            mn = mu[idx] + t * step[:, 3]
            rn, gn = _residual(surface, Y[idx], xn, mn)
            ok = np.linalg.norm(rn, axis=1) < base * (1.0 - 1e-4 * t) + tol
            if ok.all():
                break
            t = np.where(ok, t, 0.5 * t)
        x[idx] = xn
        mu[idx] = mn
        res[idx] = rn
        g[idx] = gn
    else:
        err = np.max(np.abs(res), axis=1)
        if np.any(err > tol * scale * 100):
            bad = int(np.sum(err > tol * scale * 100))
            raise ProjectionError(f"closest-point iteration failed for {bad} points")
    n0 = g / np.linalg.norm(g, axis=-1, keepdims=True)
    b = np.sum((Y - x) * n0, axis=-1)
    return x, b, n0


def _residual(surface, Y, x, mu):
    g = surface.grad(x)
    r = np.concatenate([x - Y + mu[:, None] * g, surface.phi(x)[:, None]], axis=1)
    return r, g


def chi_indicator(surface, y, rel_tol=1e-10):
    """1 inside, 0 outside, 1/2 within the on-surface tolerance band."""
    y = np.asarray(y, dtype=float)
    phi = surface.phi(y)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        gn = np.linalg.norm(surface.grad(y), axis=-1)
        ok = np.isfinite(gn) & (gn > 0)
        dist = np.where(ok, phi / np.where(ok, gn, 1.0), phi)
    tol = rel_tol * surface.diameter
    chi = np.where(dist < -tol, 1.0, np.where(dist > tol, 0.0, 0.5))
    return float(chi) if chi.ndim == 0 else chi


def surface_gradient(grad_f, surface, x):
    """Tangential gradient grad f - n (n . grad f); grad_f is a callable."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(grad_f(x), dtype=float)
    n = surface.normal(x)
    return g - n * np.sum(n * g, axis=-1, keepdims=True)


def surface_from_config(conf):
    """Build a surface from a key=value mapping (see README)."""
    kind = conf.get("kind", "sphere")
    center = _vec(conf.get("center", "0,0,0"))
    if kind == "sphere":
        return Sphere(float(conf.get("radius", 1.0)), center)
    if kind in ("ellipsoid", "spheroid"):
        axes = _vec(conf.get("semi_axes", "1,0.5,0.5"))
        rot = rotation_z(float(conf.get("rotation_deg", 0.0)))
        return Ellipsoid(axes, center, rot)
    if kind == "molecular":
        return MolecularSurface(r=float(conf.get("atom_radius", 0.5)),
                                c=float(conf.get("level", 0.6)), center=center)
    raise ValueError(f"unknown surface kind {kind!r}")


def _vec(text):
    if isinstance(text, str):
        return np.array([float(t) for t in text.replace(" ", "").split(",")])
    return np.asarray(text, dtype=float)
