"""Stokes flow around a prolate spheroid translating along its axis.

The exterior velocity is a line of Stokeslets of constant strength plus a line
of potential dipoles with strength proportional to c^2 - xi^2 on the focal
segment [-c, c].  The two strengths are fitted to the no-slip condition on
the surface; the fit residual is kept so callers can check the representation.
The surface force is a constant vector times the equilibrium charge density of
the ellipsoid, which also gives a closed form for the pressure.
Normalization: u = (1/8pi) int S f, p = int grad G(y - x) . f, viscosity 1.
"""
import math

import numpy as np

from .surfaces import Ellipsoid

_CHUNK = 4096


class TranslatingSpheroid:
    """Spheroid with semi-axes (a, b, b), a > b, moving with speed U along body x."""

    def __init__(self, surface, speed=1.0, n_line=256, n_fit=400):
        if not isinstance(surface, Ellipsoid):
            raise TypeError("a prolate spheroid Ellipsoid is required")
        a, b, c = surface.semi_axes
        if not (a > b and math.isclose(b, c, rel_tol=1e-14)):
            raise ValueError("semi-axes must be (a, b, b) with a > b")
        self.surface = surface
        self.a, self.b = float(a), float(b)
        self.c = math.sqrt(self.a ** 2 - self.b ** 2)
        self.speed = float(speed)
        t, w = np.polynomial.legendre.leggauss(n_line)
        self._xi = self.c * t
        self._w = self.c * w
        self.alpha, self.beta, self.residual = self._fit(n_fit)

    @property
    def velocity(self):
        """Translation velocity in world coordinates."""
        return self.speed * self.surface.rotation[:, 0]

    def _line_fields(self, yb):
        # body-frame Stokeslet and dipole line integrals of e_x, each (N, 3)
        if len(yb) > _CHUNK:
            parts = [self._line_fields(yb[a:a + _CHUNK]) for a in range(0, len(yb), _CHUNK)]
            return np.concatenate([q[0] for q in parts]), np.concatenate([q[1] for q in parts])
        R = yb[:, None, :] - np.stack([self._xi, 0 * self._xi, 0 * self._xi], axis=1)[None]
        r2 = np.sum(R * R, axis=-1)
        r = np.sqrt(r2)
        Rx = R[..., 0]
        ex = np.zeros(3)
        ex[0] = 1.0
        st = ex / r[..., None] + R * (Rx / (r2 * r))[..., None]
        dp = -ex / (r2 * r)[..., None] + 3.0 * R * (Rx / (r2 * r2 * r))[..., None]
        wd = self._w * (self.c ** 2 - self._xi ** 2)
        return np.einsum("nmk,m->nk", st, self._w), np.einsum("nmk,m->nk", dp, wd)

    def _fit(self, n_fit):
        th = np.linspace(0.0, math.pi, n_fit)
        ph = np.linspace(0.0, 2.0 * math.pi, 7, endpoint=False)
        T, P = np.meshgrid(th, ph, indexing="ij")
        pts = np.stack([self.a * np.cos(T), self.b * np.sin(T) * np.cos(P),
                        self.b * np.sin(T) * np.sin(P)], axis=-1).reshape(-1, 3)
        st, dp = self._line_fields(pts)
        A = np.stack([st.reshape(-1), dp.reshape(-1)], axis=1)
        rhs = np.zeros((len(pts), 3))
        rhs[:, 0] = self.speed
        coef, *_ = np.linalg.lstsq(A, rhs.reshape(-1), rcond=None)
        res = float(np.abs(A @ coef - rhs.reshape(-1)).max())
        return float(coef[0]), float(coef[1]), res

    @property
    def total_force(self):
        """Force exerted on the fluid, world coordinates."""
        return 16.0 * math.pi * self.alpha * self.c * self.surface.rotation[:, 0]

    def inside(self, y):
        return self.surface.phi(y) < 0

    def velocity_at(self, y):
        """Exact velocity; equals the body velocity inside and on the surface."""
        y = np.asarray(y, dtype=float).reshape(-1, 3)
        out = np.broadcast_to(self.velocity, y.shape).copy()
        ext = ~self.inside(y)
        if ext.any():
            yb = self.surface.to_body(y[ext])
            st, dp = self._line_fields(yb)
            out[ext] = (self.alpha * st + self.beta * dp) @ self.surface.rotation.T
        return out

    def pressure_line(self, y):
        """Pressure from the Stokeslet line (dipoles carry none); zero inside."""
        y = np.asarray(y, dtype=float).reshape(-1, 3)
        out = np.zeros(len(y))
        ext = ~self.inside(y)
        if ext.any():
            yb = self.surface.to_body(y[ext])
            vals = np.empty(len(yb))
            for a in range(0, len(yb), _CHUNK):
                c = yb[a:a + _CHUNK]
                Rx = c[:, None, 0] - self._xi[None]
                r2 = Rx * Rx + c[:, None, 1] ** 2 + c[:, None, 2] ** 2
                vals[a:a + _CHUNK] = 2.0 * self.alpha * np.sum(self._w * Rx / (r2 * np.sqrt(r2)), axis=1)
            out[ext] = vals
        return out

    def _lambda(self, yb):
        # outer ellipsoidal coordinate: x^2/(a^2+l) + rho^2/(b^2+l) = 1
        a2, b2 = self.a ** 2, self.b ** 2
        x2 = yb[:, 0] ** 2
        q2 = yb[:, 1] ** 2 + yb[:, 2] ** 2
        B = a2 + b2 - x2 - q2
        C = a2 * b2 - x2 * b2 - q2 * a2
        return 0.5 * (-B + np.sqrt(np.maximum(B * B - 4.0 * C, 0.0)))

    def pressure(self, y):
        """Closed-form pressure -F . grad V with V the unit-charge conductor potential."""
        y = np.asarray(y, dtype=float).reshape(-1, 3)
        out = np.zeros(len(y))
        ext = ~self.inside(y)
        if ext.any():
            yb = self.surface.to_body(y[ext])
            lam = np.maximum(self._lambda(yb), 0.0)
            ai2 = np.array([self.a ** 2, self.b ** 2, self.b ** 2])
            den = ai2[None] + lam[:, None]
            glam = 2.0 * yb / den / np.sum(yb * yb / den ** 2, axis=1, keepdims=True)
            delta_s = np.sqrt(np.prod(den, axis=1))
            gradV = -glam / (8.0 * math.pi * delta_s[:, None])
            fb = np.array([16.0 * math.pi * self.alpha * self.c, 0.0, 0.0])
            out[ext] = -gradV @ fb
        return out

    def charge_density(self, x):
        """Unit-total equilibrium charge density at surface points."""
        xb = self.surface.to_body(x)
        abc = self.a * self.b * self.b
        ai4 = np.array([self.a, self.b, self.b]) ** 4
        return 1.0 / (4.0 * math.pi * abc * np.sqrt(np.sum(xb * xb / ai4, axis=-1)))

    def force_density(self, x, n=None):
        """Surface force on the fluid at surface points x."""
        return self.charge_density(x)[:, None] * self.total_force[None]
