# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled direct-summation kernels.

Each routine loops over targets and, per target, accumulates over sources in
index order, so results do not depend on how targets are batched.  A target
flagged near uses the shape factors given by its coefficient rows (P: the
polynomial, D: its Taylor series) for sources closer than cutoff*delta and
the plain kernel otherwise.
"""
import numpy as np
from libc.math cimport erf, exp, sqrt, M_PI

DEF NPOLY = 5
DEF NSERIES = 18
cdef double SERIES_RHO = 0.5
cdef double TWO_OVER_SQRT_PI = 1.1283791670955126


cdef inline double _over(double rho, const double* P, const double* D, int power) noexcept nogil:
    # s(rho) / rho^power
    cdef double r2 = rho * rho
    cdef double acc, val
    cdef int n, start
    if rho < SERIES_RHO:
        start = (power - 1) // 2
        acc = 0.0
        for n in range(NSERIES - 1, start - 1, -1):
            acc = acc * r2 + D[n]
        return TWO_OVER_SQRT_PI * acc
    acc = P[NPOLY - 1]
    for n in range(NPOLY - 2, -1, -1):
        acc = acc * r2 + P[n]
    val = erf(rho) + TWO_OVER_SQRT_PI * exp(-r2) * rho * acc
    if power == 1:
        return val / rho
    if power == 3:
        return val / (rho * r2)
    return val / (rho * r2 * r2)


def laplace_layers(const double[:, ::1] Y, const double[:, ::1] X, const double[:, ::1] N,
                   const double[::1] W, const double[::1] f, const double[::1] g,
                   const double[::1] g0, const signed char[::1] near,
                   const double[:, ::1] P1, const double[:, ::1] D1,
                   const double[:, ::1] P2, const double[:, ::1] D2,
                   double delta, double cutoff):
    """Single layer sum G s1 f w and double layer sum dG/dn s2 (g - g0) w."""
    cdef Py_ssize_t nt = Y.shape[0], ns = X.shape[0], t, j
    cdef double[::1] S = np.zeros(nt)
    cdef double[::1] Dl = np.zeros(nt)
    cdef double y0, y1, y2, r0, r1, r2_, rr, r, rho, rn, acc_s, acc_d, lim2
    cdef double inv4pi = 1.0 / (4.0 * M_PI)
    cdef double d3 = delta * delta * delta
    lim2 = (cutoff * delta) ** 2
    with nogil:
        for t in range(nt):
            y0 = Y[t, 0]; y1 = Y[t, 1]; y2 = Y[t, 2]
            acc_s = 0.0
            acc_d = 0.0
            for j in range(ns):
                r0 = X[j, 0] - y0; r1 = X[j, 1] - y1; r2_ = X[j, 2] - y2
                rr = r0 * r0 + r1 * r1 + r2_ * r2_
                rn = r0 * N[j, 0] + r1 * N[j, 1] + r2_ * N[j, 2]
                if near[t] and rr < lim2:
                    rho = sqrt(rr) / delta
                    acc_s = acc_s - _over(rho, &P1[t, 0], &D1[t, 0], 1) / delta * f[j] * W[j]
                    acc_d = acc_d + rn * _over(rho, &P2[t, 0], &D2[t, 0], 3) / d3 * (g[j] - g0[t]) * W[j]
                else:
                    r = sqrt(rr)
                    acc_s = acc_s - f[j] * W[j] / r
                    acc_d = acc_d + rn / (rr * r) * (g[j] - g0[t]) * W[j]
            S[t] = acc_s * inv4pi
            Dl[t] = acc_d * inv4pi
    return np.asarray(S), np.asarray(Dl)


def stokes_single(const double[:, ::1] Y, const double[:, ::1] X, const double[:, ::1] N,
                  const double[::1] W, const double[:, ::1] F, const double[::1] f0n,
                  const signed char[::1] near,
                  const double[:, ::1] P1, const double[:, ::1] D1,
                  const double[:, ::1] P2, const double[:, ::1] D2,
                  double delta, double cutoff):
    """(1/8pi) sum S(y, x) [F - f0n n(x)] w with the regularized Stokeslet."""
    cdef Py_ssize_t nt = Y.shape[0], ns = X.shape[0], t, j
    cdef double[:, ::1] U = np.zeros((nt, 3))
    cdef double R0, R1, R2, rr, r, rho, a1, a2, d0, d1, d2, rd, u0, u1, u2, lim2
    cdef double inv8pi = 1.0 / (8.0 * M_PI)
    cdef double d3 = delta * delta * delta
    lim2 = (cutoff * delta) ** 2
    with nogil:
        for t in range(nt):
            u0 = 0.0; u1 = 0.0; u2 = 0.0
            for j in range(ns):
                R0 = Y[t, 0] - X[j, 0]; R1 = Y[t, 1] - X[j, 1]; R2 = Y[t, 2] - X[j, 2]
                rr = R0 * R0 + R1 * R1 + R2 * R2
                d0 = (F[j, 0] - f0n[t] * N[j, 0]) * W[j]
                d1 = (F[j, 1] - f0n[t] * N[j, 1]) * W[j]
                d2 = (F[j, 2] - f0n[t] * N[j, 2]) * W[j]
                if near[t] and rr < lim2:
                    rho = sqrt(rr) / delta
                    a1 = _over(rho, &P1[t, 0], &D1[t, 0], 1) / delta
                    a2 = _over(rho, &P2[t, 0], &D2[t, 0], 3) / d3
                else:
                    r = sqrt(rr)
                    a1 = 1.0 / r
                    a2 = a1 / rr
                rd = (R0 * d0 + R1 * d1 + R2 * d2) * a2
                u0 = u0 + a1 * d0 + R0 * rd
                u1 = u1 + a1 * d1 + R1 * rd
                u2 = u2 + a1 * d2 + R2 * rd
            U[t, 0] = u0 * inv8pi
            U[t, 1] = u1 * inv8pi
            U[t, 2] = u2 * inv8pi
    return np.asarray(U)


def stokes_double(const double[:, ::1] Y, const double[:, ::1] X, const double[:, ::1] N,
                  const double[::1] W, const double[:, ::1] Q, const double[:, ::1] q0,
                  const signed char[::1] mode, const double[:, ::1] X0,
                  const double[:, ::1] N0, const double[::1] B,
                  const double[:, ::1] P2, const double[:, ::1] D2,
                  const double[:, ::1] P3, const double[:, ::1] D3,
                  double delta, double cutoff):
    """(1/8pi) sum T_ijk (q_j - q0_j) n_k w.

    mode 0: plain kernel; 1: split kernel T1 s2 + T2 s3 about (x0, n0, b);
    2: on-surface T s3*.
    """
    cdef Py_ssize_t nt = Y.shape[0], ns = X.shape[0], t, j
    cdef double[:, ::1] V = np.zeros((nt, 3))
    cdef double[:, ::1] M = np.asarray(N) * np.asarray(W)[:, None]
    cdef double R0, R1, R2, rr, r, rho, d0, d1, d2, m0, m1, m2, Rd, Rm, fac
    cdef double h0, h1, h2, n0, n1, n2, b, nd, nm, hd, hm, hn, hh, A0, A1, A2
    cdef double B0, B1, B2, c, k1, k2, v0, v1, v2, lim2, y0, y1, y2, e0, e1, e2
    cdef double d5 = delta ** 5
    cdef double d3 = delta ** 3
    cdef double inv8pi = 1.0 / (8.0 * M_PI)
    cdef int md
    lim2 = (cutoff * delta) ** 2
    with nogil:
        for t in range(nt):
            v0 = 0.0; v1 = 0.0; v2 = 0.0
            md = mode[t]
            y0 = Y[t, 0]; y1 = Y[t, 1]; y2 = Y[t, 2]
            e0 = q0[t, 0]; e1 = q0[t, 1]; e2 = q0[t, 2]
            n0 = N0[t, 0]; n1 = N0[t, 1]; n2 = N0[t, 2]
            b = B[t]
            for j in range(ns):
                R0 = y0 - X[j, 0]; R1 = y1 - X[j, 1]; R2 = y2 - X[j, 2]
                rr = R0 * R0 + R1 * R1 + R2 * R2
                d0 = Q[j, 0] - e0; d1 = Q[j, 1] - e1; d2 = Q[j, 2] - e2
                m0 = M[j, 0]; m1 = M[j, 1]; m2 = M[j, 2]
                if md != 0 and rr < lim2:
                    rho = sqrt(rr) / delta
                    if md == 1:
                        h0 = X[j, 0] - X0[t, 0]; h1 = X[j, 1] - X0[t, 1]; h2 = X[j, 2] - X0[t, 2]
                        nd = n0 * d0 + n1 * d1 + n2 * d2
                        nm = n0 * m0 + n1 * m1 + n2 * m2
                        hd = h0 * d0 + h1 * d1 + h2 * d2
                        hm = h0 * m0 + h1 * m1 + h2 * m2
                        hn = h0 * n0 + h1 * n1 + h2 * n2
                        hh = h0 * h0 + h1 * h1 + h2 * h2
                        # A = b nnn - sym(n n xh), B = b sym(n xh xh) - xh xh xh, contracted
                        A0 = b * n0 * nd * nm - (n0 * nd * hm + n0 * hd * nm + h0 * nd * nm)
                        A1 = b * n1 * nd * nm - (n1 * nd * hm + n1 * hd * nm + h1 * nd * nm)
                        A2 = b * n2 * nd * nm - (n2 * nd * hm + n2 * hd * nm + h2 * nd * nm)
                        B0 = b * (n0 * hd * hm + h0 * nd * hm + h0 * hd * nm) - h0 * hd * hm
                        B1 = b * (n1 * hd * hm + h1 * nd * hm + h1 * hd * nm) - h1 * hd * hm
                        B2 = b * (n2 * hd * hm + h2 * nd * hm + h2 * hd * nm) - h2 * hd * hm
                        c = hh - 2.0 * b * hn
                        k1 = -6.0 * _over(rho, &P2[t, 0], &D2[t, 0], 3) / d3
                        k2 = -6.0 * _over(rho, &P3[t, 0], &D3[t, 0], 5) / d5
                        v0 = v0 + k1 * A0 + k2 * (B0 - c * A0)
                        v1 = v1 + k1 * A1 + k2 * (B1 - c * A1)
                        v2 = v2 + k1 * A2 + k2 * (B2 - c * A2)
                        continue
                    fac = -6.0 * _over(rho, &P3[t, 0], &D3[t, 0], 5) / d5
                else:
                    r = sqrt(rr)
                    fac = -6.0 / (rr * rr * r)
                Rd = R0 * d0 + R1 * d1 + R2 * d2
                Rm = R0 * m0 + R1 * m1 + R2 * m2
                fac = fac * Rd * Rm
                v0 = v0 + fac * R0
                v1 = v1 + fac * R1
                v2 = v2 + fac * R2
            V[t, 0] = v0 * inv8pi
            V[t, 1] = v1 * inv8pi
            V[t, 2] = v2 * inv8pi
    return np.asarray(V)


def pressure(const double[:, ::1] Y, const double[:, ::1] X, const double[:, ::1] N,
             const double[::1] W, const double[:, ::1] F, const double[::1] f0n,
             const double[:, ::1] t0, const signed char[::1] near,
             const double[:, ::1] P2, const double[:, ::1] D2,
             double delta, double cutoff):
    """Normal and tangential pressure sums (the -chi f0n term is left out).

    normal: sum (n.R) k (F.n - f0n) w; tangential: sum (n x R) k . (n x F - t0) w,
    with R = y - x and k = s2/(4 pi r^3).
    """
    cdef Py_ssize_t nt = Y.shape[0], ns = X.shape[0], t, j
    cdef double[::1] Pn = np.zeros(nt)
    cdef double[::1] Pt = np.zeros(nt)
    cdef double R0, R1, R2, rr, r, rho, k, nx, ny, nz, fx, fy, fz, c0, c1, c2
    cdef double e0, e1, e2, an, at, lim2
    cdef double inv4pi = 1.0 / (4.0 * M_PI)
    cdef double d3 = delta * delta * delta
    lim2 = (cutoff * delta) ** 2
    with nogil:
        for t in range(nt):
            an = 0.0
            at = 0.0
            for j in range(ns):
                R0 = Y[t, 0] - X[j, 0]; R1 = Y[t, 1] - X[j, 1]; R2 = Y[t, 2] - X[j, 2]
                rr = R0 * R0 + R1 * R1 + R2 * R2
                if near[t] and rr < lim2:
                    rho = sqrt(rr) / delta
                    k = _over(rho, &P2[t, 0], &D2[t, 0], 3) / d3
                else:
                    r = sqrt(rr)
                    k = 1.0 / (rr * r)
                k = k * W[j]
                nx = N[j, 0]; ny = N[j, 1]; nz = N[j, 2]
                fx = F[j, 0]; fy = F[j, 1]; fz = F[j, 2]
                an = an + (nx * R0 + ny * R1 + nz * R2) * k * (fx * nx + fy * ny + fz * nz - f0n[t])
                # n x R and n x F - t0
                c0 = ny * R2 - nz * R1; c1 = nz * R0 - nx * R2; c2 = nx * R1 - ny * R0
                e0 = ny * fz - nz * fy - t0[t, 0]
                e1 = nz * fx - nx * fz - t0[t, 1]
                e2 = nx * fy - ny * fx - t0[t, 2]
                at = at + (c0 * e0 + c1 * e1 + c2 * e2) * k
            Pn[t] = an * inv4pi
            Pt[t] = at * inv4pi
    return np.asarray(Pn), np.asarray(Pt)
