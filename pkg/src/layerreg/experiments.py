"""Convergence experiments with known solutions, error norms and CSV tables."""
from dataclasses import dataclass, field
import csv
import io
import math
import os
import time

import numpy as np

from . import evaluators as ev
from .quadrature import build_quadrature
from .regularization import RegConfig
from .surfaces import Ellipsoid, MolecularSurface, Sphere

EXPERIMENTS = ("sphere-sl", "sphere-dl", "molecular", "ellipsoids", "stresslet-identity",
               "stokeslet-normal", "grid-harmonic", "grid-stokes", "two-spheroids")
DEFAULT_H = (1.0 / 16, 1.0 / 32, 1.0 / 64)
EXTENDED_H = DEFAULT_H + (1.0 / 128,)
TABLE_COLUMNS = ["experiment", "h", "delta", "p", "q", "kappa0", "n_targets", "err_max",
                 "err_l2", "order_max", "order_l2", "seed", "wall_time_s"]


def error_norms(errors):
    """(max, rms) of per-target error magnitudes; rows of a 2-d array are vectors."""
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise ValueError("no errors to summarize")
    mag = np.abs(e) if e.ndim == 1 else np.linalg.norm(e.reshape(len(e), -1), axis=1)
    return float(mag.max()), float(np.sqrt(np.mean(mag ** 2)))


def observed_order(e_coarse, e_fine, ratio=2.0):
    if e_coarse <= 0 or e_fine <= 0:
        return float("nan")
    return math.log(e_coarse / e_fine) / math.log(ratio)


@dataclass
class ExperimentSpec:
    name: str
    h_list: tuple = DEFAULT_H
    cfg: RegConfig = field(default_factory=RegConfig)
    seed: int = 0
    out: str = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.name!r}")
        h = sorted(self.h_list, reverse=True)
        for a, b in zip(h, h[1:]):
            if not math.isclose(a / b, 2.0, rel_tol=1e-12):
                raise ValueError("h values must form a halving sequence")
        self.h_list = tuple(h)


@dataclass
class LevelResult:
    h: float
    delta: float
    n_targets: int
    err_max: float
    err_l2: float
    wall_time: float = 0.0


@dataclass
class ErrorReport:
    experiment: str
    cfg: RegConfig
    seed: int
    levels: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def orders(self, norm="max"):
        key = "err_max" if norm == "max" else "err_l2"
        errs = [getattr(lv, key) for lv in self.levels]
        return [observed_order(a, b, lv0.h / lv1.h)
                for a, b, lv0, lv1 in zip(errs, errs[1:], self.levels, self.levels[1:])]

    def overall_order(self, norm="max"):
        """Average order from the coarsest to the finest level."""
        key = "err_max" if norm == "max" else "err_l2"
        a, b = self.levels[0], self.levels[-1]
        return observed_order(getattr(a, key), getattr(b, key), a.h / b.h)


def convergence_table(reports, path=None, with_time=True):
    """CSV text with one row per (report, h); order columns compare to the previous h."""
    if isinstance(reports, ErrorReport):
        reports = [reports]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for rep in reports:
        om, ol = rep.orders("max"), rep.orders("l2")
        for i, lv in enumerate(rep.levels):
            w.writerow([rep.experiment, repr(lv.h), repr(lv.delta), rep.cfg.p, repr(rep.cfg.q),
                        repr(rep.cfg.kappa0), lv.n_targets, repr(lv.err_max), repr(lv.err_l2),
                        "" if i == 0 else f"{om[i - 1]:.6f}", "" if i == 0 else f"{ol[i - 1]:.6f}",
                        rep.seed, f"{lv.wall_time:.3f}" if with_time else ""])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


# exact solutions -----------------------------------------------------------

def sphere_harmonic(x, n=None):
    return 0.875 * (x[:, 0] - 2.0 * x[:, 1]) * (15.0 * x[:, 2] ** 2 - 3.0)


def sphere_u_inner(y):
    r2 = np.sum(y * y, axis=1)
    return 0.875 * (y[:, 0] - 2.0 * y[:, 1]) * (15.0 * y[:, 2] ** 2 - 3.0 * r2)


def sphere_u_outer(y):
    r = np.sqrt(np.sum(y * y, axis=1))
    return sphere_u_inner(y) / r ** 7


def basic_u(y):
    return (np.sin(y[:, 0]) + np.sin(y[:, 1])) * np.exp(y[:, 2])


def basic_grad(y):
    e = np.exp(y[:, 2])
    return np.stack([np.cos(y[:, 0]) * e, np.cos(y[:, 1]) * e,
                     (np.sin(y[:, 0]) + np.sin(y[:, 1])) * e], axis=1)


def jump_densities(quad, u_in, grad_in, u_out=None, grad_out=None):
    """f = [du/dn] and g = -[u] (outside minus inside) as LayerDensity objects."""
    def fjump(x, n):
        gi = np.sum(grad_in(x) * n, axis=1)
        go = 0.0 if grad_out is None else np.sum(grad_out(x) * n, axis=1)
        return go - gi

    def gjump(x, n):
        uo = 0.0 if u_out is None else u_out(x)
        return u_in(x) - uo

    return ev.LayerDensity.from_field(quad, fjump), ev.LayerDensity.from_field(quad, gjump)


def rotation_field(x, n=None):
    return np.stack([np.zeros(len(x)), -x[:, 2], x[:, 1]], axis=1)


# near-surface experiments --------------------------------------------------

def sphere_level(kind, h, cfg, seed, probability=1.0):
    S = Sphere()
    q = build_quadrature(S, h)
    T = ev.classify_targets(S, h, h, probability, seed)
    dens = ev.LayerDensity.from_field(q, sphere_harmonic)
    inside = T.b < 0
    if kind == "sl":
        val = ev.eval_harmonic_single(q, dens, T, cfg)
        exact = np.where(inside, -sphere_u_inner(T.y) / 7.0, -sphere_u_outer(T.y) / 7.0)
    else:
        val = ev.eval_harmonic_double(q, dens, T, cfg)
        exact = np.where(inside, 4.0 / 7.0 * sphere_u_inner(T.y), -3.0 / 7.0 * sphere_u_outer(T.y))
    return T, val, exact


def combined_level(surface, h, cfg, seed, probability):
    q = build_quadrature(surface, h)
    T = ev.classify_targets(surface, h, h, probability, seed)
    f, g = jump_densities(q, basic_u, basic_grad)
    S, D = ev.eval_harmonic_layers(q, f, g, T, cfg)
    exact = np.where(T.b < 0, basic_u(T.y), 0.0)
    return T, S + D, exact


SPHEROID = (1.0, 0.5, 0.5)
ELLIPSOIDS = {"1,.6,.4": ((1.0, 0.6, 0.4), 120.0), "1,.4,.3": ((1.0, 0.4, 0.3), 180.0)}
MOLECULAR_RATE = 85.0
STRESSLET_RATE = 134.0


def stresslet_level(h, cfg, seed, probability=None):
    surf = Ellipsoid(SPHEROID)
    q = build_quadrature(surf, h)
    rate = STRESSLET_RATE * h * h if probability is None else probability
    T = ev.classify_targets(surf, h, h, rate, seed)
    dens = ev.LayerDensity.from_field(q, rotation_field)
    val = ev.eval_stokes_double(q, dens, T, cfg)
    exact = T.chi[:, None] * rotation_field(T.y)
    return T, val, exact


def stokeslet_normal_level(h, cfg, seed, n_samples=1200):
    """Unsubtracted on-surface Stokeslet of f = n at sampled nodes (exact value 0)."""
    surf = Ellipsoid(SPHEROID)
    q = build_quadrature(surf, h)
    rng = np.random.Generator(np.random.Philox(seed))
    idx = np.sort(rng.choice(len(q), size=min(n_samples, len(q)), replace=False))
    T = ev.surface_targets(q, idx)
    dens = ev.LayerDensity(q, q.n.copy(), lambda x, n: n)
    val = ev.eval_stokes_single(q, dens, T, cfg, subtract=False)
    return T, val, np.zeros_like(val)


def _near_surface_levels(spec):
    name, cfg, seed = spec.name, spec.cfg, spec.seed
    opts = spec.options
    if name in ("sphere-sl", "sphere-dl"):
        kind = name.split("-")[1]
        prob = float(opts.get("probability", 1.0))
        return {name: lambda h: sphere_level(kind, h, cfg, seed, prob)}
    if name == "molecular":
        surf = MolecularSurface()
        rate = float(opts.get("rate", MOLECULAR_RATE))
        return {name: lambda h: combined_level(surf, h, cfg, seed, rate * h * h)}
    if name == "ellipsoids":
        out = {}
        for key, (axes, rate) in ELLIPSOIDS.items():
            surf = Ellipsoid(axes)
            out[f"{name}:{key}"] = (lambda s, r: (lambda h: combined_level(s, h, cfg, seed, r * h * h)))(surf, rate)
        return out
    if name == "stresslet-identity":
        return {name: lambda h: stresslet_level(h, cfg, seed)}
    if name == "stokeslet-normal":
        return {name: lambda h: stokeslet_normal_level(h, cfg, seed)}
    return None


def run_experiment(spec):
    """Run one experiment over its h ladder; returns a list of ErrorReport."""
    levels = _near_surface_levels(spec)
    if levels is not None:
        reports = []
        for label, fn in levels.items():
            rep = ErrorReport(label, spec.cfg, spec.seed)
            for h in spec.h_list:
                t0 = time.perf_counter()
                T, val, exact = fn(h)
                dt = time.perf_counter() - t0
                emax, el2 = error_norms(np.asarray(val) - np.asarray(exact))
                rep.levels.append(LevelResult(h, spec.cfg.delta(h), len(T), emax, el2, dt))
                if spec.out:
                    os.makedirs(spec.out, exist_ok=True)
                    tag = label.replace(":", "_").replace(",", "-")
                    ev.write_targets_csv(os.path.join(spec.out, f"{tag}_h{round(1 / h)}.csv"),
                                         T, val, exact)
            reports.append(rep)
    elif spec.name in ("grid-harmonic", "grid-stokes"):
        from . import grid
        reports = grid.run_grid_experiment(spec)
    else:
        from . import twophase
        reports = twophase.run_two_spheroids(spec)
    if spec.out:
        os.makedirs(spec.out, exist_ok=True)
        convergence_table(reports, os.path.join(spec.out, f"{spec.name}_convergence.csv"))
    return reports
