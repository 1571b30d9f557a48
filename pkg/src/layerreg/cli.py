"""Command-line driver: one subcommand per experiment."""
import argparse
from fractions import Fraction
import logging
import sys

from .experiments import DEFAULT_H, EXPERIMENTS, EXTENDED_H, ExperimentSpec, convergence_table, run_experiment
from .regularization import RegConfig

log = logging.getLogger("layerreg")

# per-experiment default regularization when no flag or config value is given
DEFAULTS = {
    "sphere-sl": dict(p=7, q=1.0, kappa0=4.0),
    "sphere-dl": dict(p=7, q=1.0, kappa0=4.0),
    # delta = h^(5/7)
    "grid-harmonic": dict(p=7, q=5.0 / 7.0, kappa0=RegConfig.from_kappa(1.0).kappa0),
}
CONFIG_KEYS = ("order", "q", "kappa0", "h0", "cutoff", "seed", "h_list", "out", "extended")


def parse_number(text):
    """Float from '0.25', '1/4' or '5/7'."""
    text = str(text).strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def parse_h_list(text):
    vals = [parse_number(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty h list")
    return tuple(vals)


def read_config(path):
    """key=value lines; '#' starts a comment.  Keys use underscores or dashes."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _truthy(v):
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def build_parser():
    ap = argparse.ArgumentParser(prog="layerreg", description="Regularized layer potential convergence experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--h-list", type=parse_h_list, default=None,
                        help="comma separated spacings, e.g. 1/16,1/32,1/64")
        sp.add_argument("--order", type=int, choices=(3, 5, 7), default=None)
        sp.add_argument("--q", type=parse_number, default=None)
        sp.add_argument("--kappa0", type=parse_number, default=None)
        sp.add_argument("--h0", type=parse_number, default=None)
        sp.add_argument("--cutoff", type=parse_number, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory for CSV and grid files")
        sp.add_argument("--extended", action="store_true", default=None,
                        help="append h=1/128 to the default ladder")
        sp.add_argument("--config", default=None, help="key=value file; flags override it")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="experiment option (probability, rate, eps, samples)")
    return ap


def spec_from_args(args):
    conf = read_config(args.config) if args.config else {}
    unknown = set(conf) - set(CONFIG_KEYS) - {"p"}
    options = {k: v for k, v in conf.items() if k in unknown}

    def pick(flag, key, conv):
        v = getattr(args, flag)
        if v is not None:
            return v
        if key in conf:
            return conv(conf[key])
        return None

    base = dict(DEFAULTS.get(args.experiment, {}))
    p = pick("order", "order", int)
    if p is None and "p" in conf:
        p = int(conf["p"])
    kw = {"p": p, "q": pick("q", "q", parse_number), "kappa0": pick("kappa0", "kappa0", parse_number),
          "h0": pick("h0", "h0", parse_number), "cutoff": pick("cutoff", "cutoff", parse_number)}
    base.update({k: v for k, v in kw.items() if v is not None})
    cfg = RegConfig(**base)
    extended = pick("extended", "extended", _truthy) or False
    h_list = pick("h_list", "h_list", parse_h_list)
    if h_list is None:
        h_list = EXTENDED_H if extended else DEFAULT_H
    elif extended:
        h_list = tuple(h_list) + (min(h_list) / 2.0,)
    seed = pick("seed", "seed", int) or 0
    out = pick("out", "out", str)
    for item in args.set:
        if "=" not in item:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        options[k.strip()] = v.strip()
    return ExperimentSpec(args.experiment, h_list, cfg, seed, out, options)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        spec = spec_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"layerreg: {exc}", file=sys.stderr)
        return 2
    log.info("running %s with %s on h=%s", spec.name, spec.cfg, spec.h_list)
    reports = run_experiment(spec)
    sys.stdout.write(convergence_table(reports))
    for rep in reports:
        for k, v in rep.extra.items():
            print(f"# {rep.experiment} {k}: {v}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
