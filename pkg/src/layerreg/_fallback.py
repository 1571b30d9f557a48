"""Pure numpy versions of the summation kernels in ``_core``.

Same signatures and formulas; targets are processed in blocks with the
source axis vectorized.  Used when the compiled extension is unavailable.
"""
import math

import numpy as np
from scipy.special import erf

NPOLY = 5
NSERIES = 18
SERIES_RHO = 0.5
TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_BLOCK_PAIRS = 1 << 21


def _blocks(nt, ns):
    step = max(1, _BLOCK_PAIRS // max(ns, 1))
    for a in range(0, nt, step):
        yield slice(a, min(nt, a + step))


def _over(rho, P, D, power):
    # rho (T, M); P (T, NPOLY); D (T, NSERIES)
    r2 = rho * rho
    start = (power - 1) // 2
    ser = np.zeros_like(rho)
    for n in range(NSERIES - 1, start - 1, -1):
        ser = ser * r2 + D[:, n:n + 1]
    acc = np.broadcast_to(P[:, NPOLY - 1:NPOLY], rho.shape).copy()
    for k in range(NPOLY - 2, -1, -1):
        acc = acc * r2 + P[:, k:k + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (erf(rho) + TWO_OVER_SQRT_PI * np.exp(-r2) * rho * acc) / rho ** power
    return np.where(rho < SERIES_RHO, TWO_OVER_SQRT_PI * ser, direct)


def _diff(Y, X):
    return Y[:, None, :] - X[None, :, :]


def _mask(near, rr, delta, cutoff):
    return (np.asarray(near, dtype=bool)[:, None]) & (rr < (cutoff * delta) ** 2)


def laplace_layers(Y, X, N, W, f, g, g0, near, P1, D1, P2, D2, delta, cutoff):
    nt = len(Y)
    S = np.zeros(nt)
    Dl = np.zeros(nt)
    for sl in _blocks(nt, len(X)):
        r = -_diff(Y[sl], X)  # x - y
        rr = np.sum(r * r, axis=-1)
        rn = np.sum(r * N[None], axis=-1)
        reg = _mask(near[sl], rr, delta, cutoff)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / np.sqrt(rr)
            k1 = np.where(reg, _over(np.sqrt(rr) / delta, P1[sl], D1[sl], 1) / delta, inv)
            k3 = np.where(reg, _over(np.sqrt(rr) / delta, P2[sl], D2[sl], 3) / delta ** 3, inv ** 3)
        S[sl] = -np.sum(k1 * (f * W)[None], axis=1) / (4.0 * math.pi)
        dg = (g[None] - g0[sl, None]) * W[None]
        Dl[sl] = np.sum(np.where(rr > 0, rn * k3, 0.0) * dg, axis=1) / (4.0 * math.pi)
    return S, Dl


def stokes_single(Y, X, N, W, F, f0n, near, P1, D1, P2, D2, delta, cutoff):
    nt = len(Y)
    U = np.zeros((nt, 3))
    for sl in _blocks(nt, len(X)):
        R = _diff(Y[sl], X)
        rr = np.sum(R * R, axis=-1)
        reg = _mask(near[sl], rr, delta, cutoff)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / np.sqrt(rr)
            rho = np.sqrt(rr) / delta
            a1 = np.where(reg, _over(rho, P1[sl], D1[sl], 1) / delta, inv)
            a2 = np.where(reg, _over(rho, P2[sl], D2[sl], 3) / delta ** 3, inv ** 3)
        d = (F[None] - f0n[sl, None, None] * N[None]) * W[None, :, None]
        rd = np.sum(R * d, axis=-1) * a2
        U[sl] = np.sum(a1[..., None] * d + R * rd[..., None], axis=1)
    return U / (8.0 * math.pi)


def stokes_double(Y, X, N, W, Q, q0, mode, X0, N0, B, P2, D2, P3, D3, delta, cutoff):
    nt = len(Y)
    V = np.zeros((nt, 3))
    lim2 = (cutoff * delta) ** 2
    mode = np.asarray(mode)
    for sl in _blocks(nt, len(X)):
        R = _diff(Y[sl], X)
        rr = np.sum(R * R, axis=-1)
        d = Q[None] - q0[sl, None, :]
        m = (N * W[:, None])[None]
        md = mode[sl, None]
        close = rr < lim2
        split = (md == 1) & close
        star = (md == 2) & close
        rho = np.sqrt(rr) / delta
        Rd = np.sum(R * d, axis=-1)
        Rm = np.sum(R * m, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            plain = -6.0 * Rd * Rm / (rr * rr * np.sqrt(rr))
            kstar = -6.0 * Rd * Rm * _over(rho, P3[sl], D3[sl], 5) / delta ** 5
        fac = np.where(star, kstar, np.where(split, 0.0, plain))
        fac = np.where(np.isfinite(fac), fac, 0.0)
        out = np.sum(fac[..., None] * R, axis=1)
        if split.any():
            n = N0[sl, None, :]
            b = B[sl, None]
            h = X[None] - X0[sl, None, :]
            nd = np.sum(n * d, axis=-1)
            nm = np.sum(n * m, axis=-1)
            hd = np.sum(h * d, axis=-1)
            hm = np.sum(h * m, axis=-1)
            c = np.sum(h * h, axis=-1) - 2.0 * b * np.sum(h * n, axis=-1)
            bb = b[..., None]
            A = (bb * n * (nd * nm)[..., None]
                 - (n * (nd * hm)[..., None] + n * (hd * nm)[..., None] + h * (nd * nm)[..., None]))
            Bv = (bb * (n * (hd * hm)[..., None] + h * (nd * hm)[..., None] + h * (hd * nm)[..., None])
                  - h * (hd * hm)[..., None])
            with np.errstate(divide="ignore", invalid="ignore"):
                k1 = -6.0 * _over(rho, P2[sl], D2[sl], 3) / delta ** 3
                k2 = -6.0 * _over(rho, P3[sl], D3[sl], 5) / delta ** 5
            term = k1[..., None] * A + k2[..., None] * (Bv - c[..., None] * A)
            out += np.sum(np.where(split[..., None], term, 0.0), axis=1)
        V[sl] = out
    return V / (8.0 * math.pi)


def pressure(Y, X, N, W, F, f0n, t0, near, P2, D2, delta, cutoff):
    nt = len(Y)
    Pn = np.zeros(nt)
    Pt = np.zeros(nt)
    fn = np.sum(F * N, axis=-1)
    nxf = np.cross(N, F)
    for sl in _blocks(nt, len(X)):
        R = _diff(Y[sl], X)
        rr = np.sum(R * R, axis=-1)
        reg = _mask(near[sl], rr, delta, cutoff)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(reg, _over(np.sqrt(rr) / delta, P2[sl], D2[sl], 3) / delta ** 3,
                         1.0 / (rr * np.sqrt(rr)))
        k = k * W[None]
        nR = np.sum(N[None] * R, axis=-1)
        Pn[sl] = np.sum(nR * k * (fn[None] - f0n[sl, None]), axis=1)
        c = np.cross(N[None], R)
        e = nxf[None] - t0[sl, None, :]
        Pt[sl] = np.sum(np.sum(c * e, axis=-1) * k, axis=1)
    return Pn / (4.0 * math.pi), Pt / (4.0 * math.pi)
