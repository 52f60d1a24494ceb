"""Command-line entry point: ``tmcmc <subcommand> ...``.

Errors are reported as a single JSON line on stderr with a nonzero exit code.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ..diagnostics import (
    drift_report,
    estimate_pi_N0,
    exact_pi_N0_gaussian,
    write_drift_csv,
)
from .config import load_config
from .experiments import (
    build_base_target,
    build_kernel,
    build_target,
    format_table,
    fraction_below,
    run_diffeo_comparison,
    run_experiment,
    run_table,
)


def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


_SHORT = ("target", "kernel", "dim", "scale", "iters", "replicates", "seed", "out")


def _overrides(args) -> dict:
    vals = _parse_set(args.set)
    for key in _SHORT:
        v = getattr(args, key, None)
        if v is not None:
            vals[key] = str(v)
    return vals


def _add_common(p: argparse.ArgumentParser, with_out=True):
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--target", help="gaussian_iid | gaussian_corr | student_t | cauchy")
    p.add_argument("--kernel", help="rwmh | additive | multiplicative | addmult | mixture_star | essential_p")
    p.add_argument("--dim", type=int)
    p.add_argument("--scale", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    if with_out:
        p.add_argument("--out", help="CSV output path")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="any other config key (repeatable)")


def cmd_run(args):
    cfg = load_config(args.config, _overrides(args))
    res = run_experiment(cfg)
    print(json.dumps(res.summary()))


def cmd_table(args):
    base = load_config(args.config, {k: v for k, v in _overrides(args).items() if k not in ("dim", "scale", "kernel", "out")})
    dims = [int(s) for s in args.dims.split(",")] if args.dims else None
    results = run_table(args.table_id, full=args.full, dims=dims, out=args.out, base=base)
    print(format_table(args.table_id, results))


def cmd_diffeo(args):
    extra = _parse_set(args.set)
    results = run_diffeo_comparison(args.target, args.dim, args.iters, args.replicates, args.seed,
                                    args.dof, out=args.out, **{k.replace(".", "_"): v for k, v in extra.items()})
    curves = {k: r.ks_curve for k, r in results.items()}
    summary = {k: r.summary() for k, r in results.items()}
    summary["fraction_add_below_rwmh_diffeo"] = fraction_below(curves["add_diffeo"], curves["rwmh_diffeo"])
    summary["fraction_rwmh_diffeo_below_direct"] = fraction_below(curves["rwmh_diffeo"], curves["rwmh_direct"])
    summary["fraction_add_diffeo_below_direct"] = fraction_below(curves["add_diffeo"], curves["add_direct"])
    print(json.dumps(summary))


def cmd_drift(args):
    cfg = load_config(args.config, _overrides(args))
    target = build_target(cfg)
    spec = build_kernel(cfg, target)
    radii = [float(s) for s in args.radii.split(",")]
    e1 = np.zeros(cfg.dim)
    e1[0] = 1.0
    rep = drift_report(spec, target, [r * e1 for r in radii], args.mc_samples, np.random.default_rng(cfg.seed))
    if cfg.output_path:
        write_drift_csv(rep, cfg.output_path)
    print(json.dumps({"x_norm": rep.x_norms, "ratio": rep.ratios, "stderr": rep.std_errors}))


def cmd_pin0(args):
    cfg = load_config(args.config, _overrides(args))
    target = build_base_target(cfg)
    est = estimate_pi_N0(target.log_density, args.a, cfg.dim, args.n1, args.n2, np.random.default_rng(cfg.seed))
    out = {"value": est.value, "log_value": est.log_value, "n1": est.n1, "n2": est.n2, "halfwidth": est.halfwidth}
    if cfg.target == "gaussian_iid":
        out["exact"] = exact_pi_N0_gaussian(cfg.dim, args.a)
    print(json.dumps(out))


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tmcmc", description="Transformation-based MCMC experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and write its K-S curve")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table", help="run the grid of one of the comparison tables")
    p.add_argument("table_id", type=int, choices=(1, 2, 3))
    p.add_argument("--full", action="store_true", help="include the d=200 rows of table 1")
    p.add_argument("--dims", help="comma-separated dimensions replacing the default grid")
    _add_common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("diffeo-compare", help="RWMH vs Add-TMCMC, direct vs transformed, heavy-tailed target")
    p.add_argument("--target", default="cauchy", choices=("cauchy", "student_t"))
    p.add_argument("--dof", type=float, default=10.0)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV with one labeled series per sampler")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_diffeo)

    p = sub.add_parser("drift-report", help="drift ratio PV/V along the first axis")
    _add_common(p)
    p.add_argument("--radii", default="5,10,20")
    p.add_argument("--mc-samples", type=int, default=20000)
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("estimate-pin0", help="importance-sampling estimate of the central box mass")
    _add_common(p, with_out=False)
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--n1", type=int, default=100_000)
    p.add_argument("--n2", type=int, default=100_000)
    p.set_defaults(func=cmd_pin0)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        try:
            args = ap.parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        args.func(args)
    except Exception as exc:  # surfaced as one machine-readable line
        msg = " ".join(str(exc).split())
        print(json.dumps({"error": type(exc).__name__, "message": msg}), file=sys.stderr)
        return 2 if isinstance(exc, UsageError) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
