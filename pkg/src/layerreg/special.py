"""Scaled complementary error function.

``erfcx(x) = exp(x**2) * erfc(x)`` evaluated without overflow.  Power series
for small arguments, a backward-evaluated Laplace continued fraction for
moderate ones and the asymptotic series for large ones.
"""
import math

import numpy as np

_SQRT_PI = math.sqrt(math.pi)

# switch points; accuracy verified against mpmath in the test suite
_SERIES_MAX = 0.9
_ASYMPT_MIN = 30.0
_CF_DEPTH = 300


def _series(x):
    # exp(x^2) - 2x/sqrt(pi) * sum_n (2x^2)^n / (2n+1)!!
    x2 = x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for n in range(1, 40):
        term = term * (2.0 * x2) / (2 * n + 1)
        total = total + term
    return np.exp(x2) - 2.0 * x / _SQRT_PI * total


def _contfrac(x):
    # erfcx(x) = 1/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    tail = np.zeros_like(x)
    for k in range(_CF_DEPTH, 0, -1):
        tail = (0.5 * k) / (x + tail)
    return 1.0 / (_SQRT_PI * (x + tail))


def _asymptotic(x):
    inv2 = 1.0 / (2.0 * x * x)
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 12):
        term = -term * (2 * k - 1) * inv2
        total = total + term
    return total / (x * _SQRT_PI)


def erfcx(x):
    """Return exp(x^2) erfc(x) elementwise; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    xa = np.atleast_1d(arr)
    out = np.empty_like(xa)
    ax = np.abs(xa)

    small = ax <= _SERIES_MAX
    large = ax >= _ASYMPT_MIN
    mid = ~(small | large)
    if small.any():
        out[small] = _series(ax[small])
    if mid.any():
        out[mid] = _contfrac(ax[mid])
    if large.any():
        out[large] = _asymptotic(ax[large])

    neg = xa < 0
    if neg.any():
        with np.errstate(over="ignore"):
            out[neg] = 2.0 * np.exp(ax[neg] ** 2) - out[neg]

    if scalar:
        return float(out[0])
    return out
