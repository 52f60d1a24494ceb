"""Experiment orchestration: single runs, table grids and the diffeomorphism comparison."""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..diagnostics import (
    KSCurve,
    estimate_pi_N0,
    exact_pi_N0_gaussian,
    ks_curve,
    write_ks_csv,
)
from ..diffeo import IsotropicMap, RadialProfile, TransformedTarget
from ..kernels import KernelSpec
from ..proposals import EpsilonProposal
from ..targets import GaussianTarget, LogTarget, StudentTTarget, compound_symmetric
from .config import ExperimentConfig, apply_overrides


@dataclass
class ExperimentResult:
    acceptance_pct: float
    avg_ks_post_burnin: float
    ks_curve: KSCurve
    wall_time: float
    config: ExperimentConfig

    def summary(self) -> dict:
        c = self.config
        return {
            "target": c.target, "dim": c.dim, "kernel": c.kernel, "scale": c.scale,
            "diffeo": c.diffeo_kind or "none", "iters": c.iters, "replicates": c.replicates,
            "acceptance_pct": round(self.acceptance_pct, 4),
            "avg_ks": round(self.avg_ks_post_burnin, 5),
            "wall_time_s": round(self.wall_time, 2),
        }


# ---------------------------------------------------------------------------
# builders


def build_base_target(cfg: ExperimentConfig) -> LogTarget:
    d = cfg.dim
    zero = np.zeros(d)
    if cfg.target == "gaussian_iid":
        return GaussianTarget.standard(d)
    if cfg.target == "gaussian_corr":
        return GaussianTarget(zero, compound_symmetric(d))
    scale = np.eye(d) if cfg.iid else compound_symmetric(d)
    dof = 1.0 if cfg.target == "cauchy" else cfg.dof
    return StudentTTarget(dof, zero, scale)


def build_profile(cfg: ExperimentConfig) -> Optional[RadialProfile]:
    if cfg.diffeo_kind is None:
        return None
    return RadialProfile(cfg.diffeo_kind, R=cfg.diffeo_R, p=cfg.diffeo_p, b=cfg.diffeo_b)


def build_target(cfg: ExperimentConfig) -> LogTarget:
    """The sampler-space target: the base, or its transform when a diffeomorphism is set."""
    base = build_base_target(cfg)
    prof = build_profile(cfg)
    return base if prof is None else TransformedTarget(base, IsotropicMap(prof, cfg.dim))


def resolve_pi_n0(cfg: ExperimentConfig, target: LogTarget) -> float:
    """Box mass for the P mixture: the configured value, exact for iid Gaussians, else estimated."""
    if cfg.pi_n0 is not None:
        return cfg.pi_n0
    if cfg.target == "gaussian_iid" and cfg.diffeo_kind is None:
        return exact_pi_N0_gaussian(cfg.dim, cfg.n0_halfwidth)
    est = estimate_pi_N0(target.log_density, cfg.n0_halfwidth, cfg.dim,
                         rng=np.random.default_rng(cfg.seed))
    return float(np.clip(est.value, 1e-300, 1.0 - 1e-12))


def build_kernel(cfg: ExperimentConfig, target: LogTarget) -> KernelSpec:
    k = cfg.kernel
    eps = EpsilonProposal.restricted(cfg.mu, cfg.sigma, cfg.l1, cfg.l2)
    mult_probs = None
    if cfg.p is not None or cfg.q is not None:
        mult_probs = (1.0 / 3.0 if cfg.p is None else cfg.p, 1.0 / 3.0 if cfg.q is None else cfg.q)
    if k == "rwmh":
        return KernelSpec(k, scale=cfg.scale)
    if k == "additive":
        add_p = cfg.add_p if cfg.add_p is not None else cfg.p
        return KernelSpec(k, scale=cfg.scale, add_p=add_p)
    if k == "multiplicative":
        return KernelSpec(k, mult_epsilon=eps, mult_probs=mult_probs)
    common = dict(scale=cfg.scale, mult_epsilon=eps, add_p=cfg.add_p, mult_probs=mult_probs)
    if k == "addmult":
        part = cfg.partition if cfg.partition is not None else tuple(range(max(1, cfg.dim // 2)))
        return KernelSpec(k, addmult_partition=part, **common)
    if k == "mixture_star":
        return KernelSpec(k, mixing_weight=cfg.mixing_weight, **common)
    return KernelSpec(k, n0_halfwidth=cfg.n0_halfwidth, pi_n0=resolve_pi_n0(cfg, target), **common)


def initial_points(cfg: ExperimentConfig, target: LogTarget) -> np.ndarray:
    """Starting point(s) in sampler space.

    ``init = point`` starts every replicate at ``x0`` (all ones unless set),
    mapped through ``h^{-1}`` when a diffeomorphism is active so the chains
    start at the same original-space point.  ``init = target`` starts each
    replicate at an exact draw from the target.
    """
    if cfg.init == "target":
        base = target.base if isinstance(target, TransformedTarget) else target
        draws = base.sample(np.random.default_rng([cfg.seed, 7919]), cfg.replicates)
        return target.map.inverse(draws) if isinstance(target, TransformedTarget) else draws
    x0 = np.ones(cfg.dim) if cfg.x0 is None else np.asarray(cfg.x0, dtype=float)
    return target.map.inverse(x0) if isinstance(target, TransformedTarget) else x0


# ---------------------------------------------------------------------------
# runs


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    cfg.validate()
    t0 = time.perf_counter()
    target = build_target(cfg)
    spec = build_kernel(cfg, target)
    curve = ks_curve(spec, target, initial_points(cfg, target), cfg.iters, cfg.replicates,
                     cfg.coordinate_policy, cfg.seed, cfg.record_every)
    acc = curve.acceptance[-1]
    res = ExperimentResult(acc, curve.avg_ks(cfg.burn_in_fraction), curve, time.perf_counter() - t0, cfg)
    if cfg.output_path:
        Path(cfg.output_path).parent.mkdir(parents=True, exist_ok=True)
        write_ks_csv(curve, cfg.output_path)
    return res


TABLE_KERNELS = {1: ("rwmh", "additive"), 2: ("rwmh", "essential_p"), 3: ("rwmh", "mixture_star")}
TABLE_DIMS = {1: (2, 5, 10, 100), 2: (10, 30, 100), 3: (10, 30, 100)}
TABLE_SCALES = (2.4, 6.0)


def table_configs(table_id: int, overrides: Optional[dict] = None, full: bool = False,
                  dims=None, base: Optional[ExperimentConfig] = None) -> list:
    if table_id not in TABLE_KERNELS:
        raise ValueError(f"unknown table id {table_id!r}; expected 1, 2 or 3")
    if dims is None:
        dims = TABLE_DIMS[table_id] + ((200,) if full and table_id == 1 else ())
    base = base or ExperimentConfig(target="gaussian_iid")
    out = []
    for d in dims:
        for s in TABLE_SCALES:
            for k in TABLE_KERNELS[table_id]:
                cfg = base.replace(dim=int(d), scale=s, kernel=k, output_path=None)
                if overrides:
                    cfg = apply_overrides(cfg, overrides)
                out.append(cfg)
    return out


def format_table(table_id: int, results: list) -> str:
    names = {"rwmh": "RWMH", "additive": "Add-TMCMC", "essential_p": "Mult-TMCMC", "mixture_star": "Mix-TMCMC"}
    other = names[TABLE_KERNELS[table_id][1]]
    rows = {}
    for r in results:
        rows.setdefault((r.config.dim, r.config.scale), {})[r.config.kernel] = r
    n = results[0].config.replicates if results else 0
    lines = [f"Table {table_id} (N = {n} replicates)",
             f"{'dim':>5} {'scale':>6} | {'acc RWMH':>9} {'acc ' + other:>15} | {'KS RWMH':>8} {'KS ' + other:>14}"]
    for (d, s), cell in rows.items():
        a, b = cell.get("rwmh"), cell.get(TABLE_KERNELS[table_id][1])
        fmt = lambda r, attr, w, p: f"{getattr(r, attr):>{w}.{p}f}" if r else " " * w
        lines.append(f"{d:>5} {s:>6.1f} | {fmt(a, 'acceptance_pct', 9, 2)} {fmt(b, 'acceptance_pct', 15, 2)} | "
                     f"{fmt(a, 'avg_ks_post_burnin', 8, 4)} {fmt(b, 'avg_ks_post_burnin', 14, 4)}")
    return "\n".join(lines)


def write_table_csv(table_id: int, results: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["table", "dim", "scale", "kernel", "acceptance_rate", "avg_ks", "replicates", "iters"])
        for r in results:
            c = r.config
            w.writerow([table_id, c.dim, repr(float(c.scale)), c.kernel, repr(float(r.acceptance_pct)),
                        repr(float(r.avg_ks_post_burnin)), c.replicates, c.iters])


def run_table(table_id: int, overrides: Optional[dict] = None, full: bool = False, dims=None,
              out=None, base: Optional[ExperimentConfig] = None) -> list:
    """Run the row grid of a table (dims x scales x kernels) sequentially."""
    results = [run_experiment(cfg) for cfg in table_configs(table_id, overrides, full, dims, base)]
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        write_table_csv(table_id, results, out)
    return results


# Defaults for the heavy-tailed comparison.  The smallest smooth profile
# parameters make the transformed 50-d targets so concentrated that scale-2.4
# RWMH never moves, so the tails are opened more gently, with b chosen to put
# the transformed RWMH acceptance near its usual optimum.  The start keeps
# |x0| = sqrt(d) but alternates signs: the all-ones point lies on the long
# axis of the compound-symmetric scale matrix, deep inside the central peak,
# where every scale-2.4 random-walk proposal is rejected.
DIFFEO_COMPARE_PROFILE = dict(diffeo_kind="composite", diffeo_R=10.0, diffeo_p=3.0, diffeo_b=0.3)


def alternating_start(dim: int) -> tuple:
    return tuple(float((-1) ** i) for i in range(dim))


def diffeo_configs(target: str = "cauchy", dim: int = 50, iters: int = 5000, replicates: int = 100,
                   seed: int = 0, dof: float = 10.0, profile: Optional[dict] = None, **extra) -> dict:
    prof = dict(DIFFEO_COMPARE_PROFILE if profile is None else profile)
    extra.setdefault("x0", alternating_start(dim))
    base = ExperimentConfig(target=target, dim=dim, dof=dof, iters=iters, replicates=replicates,
                            seed=seed, scale=2.4, **extra)
    out = {}
    for k, name in (("rwmh", "rwmh"), ("additive", "add")):
        out[f"{name}_direct"] = base.replace(kernel=k)
        out[f"{name}_diffeo"] = base.replace(kernel=k, **prof)
    return out


def run_diffeo_comparison(target: str = "cauchy", dim: int = 50, iters: int = 5000, replicates: int = 100,
                          seed: int = 0, dof: float = 10.0, profile: Optional[dict] = None,
                          out=None, **extra) -> dict:
    """{RWMH, Add-TMCMC} x {direct, diffeomorphism} K-S curves for one heavy-tailed target.

    Returns a dict from series label to :class:`ExperimentResult`; with
    ``out`` set, writes all four curves to one CSV with a ``series`` column.
    """
    cfgs = diffeo_configs(target, dim, iters, replicates, seed, dof, profile, **extra)
    results = {label: run_experiment(cfg) for label, cfg in cfgs.items()}
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["series", "iteration", "ks", "acceptance_rate"])
            for label, r in results.items():
                c = r.ks_curve
                for it, k, a in zip(c.iterations, c.ks, c.acceptance):
                    w.writerow([label, it, repr(float(k)), repr(float(a))])
    return results


def fraction_below(a: KSCurve, b: KSCurve, burn_in_fraction: float = 0.2) -> float:
    """Share of post burn-in recorded iterations at which curve ``a`` is strictly below ``b``."""
    ia, ka = a.post_burn_in(burn_in_fraction)
    ib, kb = b.post_burn_in(burn_in_fraction)
    if not np.array_equal(ia, ib):
        raise ValueError("curves were recorded at different iterations")
    return float(np.mean(ka < kb))
