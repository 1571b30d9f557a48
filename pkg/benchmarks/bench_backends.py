"""Time the compiled and numpy summation backends on the same problem.

    python benchmarks/bench_backends.py [--h 1/32] [--targets 2000] [--repeat 3]

Prints one CSV row per (evaluator, backend) with the best wall time, the
speedup over the fallback and the max difference between the two results.
"""
import argparse
import csv
import sys
import time

import numpy as np

from layerreg import backend, evaluators as ev
from layerreg.cli import parse_number
from layerreg.quadrature import build_quadrature
from layerreg.regularization import RegConfig
from layerreg.surfaces import Ellipsoid


def rotation(x, n=None):
    return np.stack([np.zeros(len(x)), -x[:, 2], x[:, 1]], axis=1)


def setup(h, n_targets, seed):
    surf = Ellipsoid((1.0, 0.6, 0.4))
    q = build_quadrature(surf, h)
    T = ev.classify_targets(surf, h, h, 1.0, seed)
    rng = np.random.default_rng(seed)
    T = T.subset(np.sort(rng.choice(len(T), size=min(n_targets, len(T)), replace=False)))
    scalar = ev.LayerDensity.from_field(q, lambda x, n: np.sin(x[:, 0]) * np.exp(x[:, 2]))
    vec = ev.LayerDensity.from_field(q, rotation)
    cfg = RegConfig(p=7, q=5.0 / 7.0, kappa0=4.0)
    return {
        "harmonic_single": lambda b: ev.eval_harmonic_single(q, scalar, T, cfg, backend=b),
        "harmonic_double": lambda b: ev.eval_harmonic_double(q, scalar, T, cfg, backend=b),
        "stokes_single": lambda b: ev.eval_stokes_single(q, vec, T, cfg, backend=b),
        "stokes_double": lambda b: ev.eval_stokes_double(q, vec, T, cfg, backend=b),
    }, len(q), len(T)


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, np.asarray(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=parse_number, default=1.0 / 32)
    ap.add_argument("--targets", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if backend.BACKEND != "cython":
        print("compiled backend unavailable; build the extension first", file=sys.stderr)
        return 1
    cases, n_nodes, n_targets = setup(args.h, args.targets, args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["evaluator", "backend", "nodes", "targets", "seconds", "speedup", "max_diff"])
    for name, fn in cases.items():
        tp, vp = best_time(lambda: fn("python"), args.repeat)
        tc, vc = best_time(lambda: fn("cython"), args.repeat)
        diff = float(np.max(np.abs(vp - vc)))
        w.writerow([name, "python", n_nodes, n_targets, f"{tp:.4f}", "1.00", ""])
        w.writerow([name, "cython", n_nodes, n_targets, f"{tc:.4f}", f"{tp / tc:.2f}", f"{diff:.2e}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
