"""Convergence and performance diagnostics.

* K-S distance of a replicate ensemble against the target marginal, and the
  K-S curve of an ensemble of chains started from a common point.
* Acceptance rates.
* Monte-Carlo estimates of the drift ratio ``PV(x) / V(x)`` for
  ``V = c / sqrt(pi)``.
* An importance-sampling estimate of the target mass of the box [-a, a]^d.
"""
from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp, ndtr

from .kernels import AcceptanceStats, KernelKind, KernelSpec, log_move_ratio, make_engine, run_chains
from .proposals import multiplicative_epsilon_from_uniforms
from .targets import LogTarget, StudentTTarget


class CoordinatePolicy(str, enum.Enum):
    FIRST_COORDINATE = "first"
    AVERAGE_OVER_COORDINATES = "average"


# ---------------------------------------------------------------------------
# K-S distance


def _ks_from_cdf_values(F: np.ndarray) -> np.ndarray:
    """Column-wise K-S statistic given target-CDF values of each sample.

    The CDF is monotone, so sorting its values is the same as evaluating it
    on the sorted sample.
    """
    F = np.sort(F, axis=0)
    n = F.shape[0]
    i = np.arange(1, n + 1, dtype=float)[:, None]
    return np.maximum(np.max(i / n - F, axis=0), np.max(F - (i - 1) / n, axis=0))


def ks_distance(ensemble, target_cdf: Callable) -> float:
    """``sup_t |F_N(t) - F(t)|`` for a one-dimensional sample.

    Examples
    --------
    >>> from scipy.special import ndtr
    >>> ks_distance([0.0], ndtr)
    0.5
    """
    x = np.asarray(ensemble, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("ensemble is empty")
    F = np.asarray(target_cdf(x), dtype=float)
    return float(_ks_from_cdf_values(F[:, None])[0])


@dataclass
class KSCurve:
    """K-S distance of the replicate ensemble at each recorded iteration.

    ``acceptance`` holds the pooled acceptance percentage up to each recorded
    iteration (NaN at iteration 0).
    """

    iterations: list
    ks: list
    replicates: int
    coordinate_policy: CoordinatePolicy
    acceptance: list = field(default_factory=list)
    stats: Optional[AcceptanceStats] = None

    def __post_init__(self):
        if len(self.iterations) != len(self.ks):
            raise ValueError("iterations and ks differ in length")

    def post_burn_in(self, burn_in_fraction: float = 0.2):
        """``(iterations, ks)`` arrays restricted to the post burn-in records."""
        it = np.asarray(self.iterations)
        ks = np.asarray(self.ks)
        keep = it >= burn_in_fraction * it[-1]
        return it[keep], ks[keep]

    def avg_ks(self, burn_in_fraction: float = 0.2) -> float:
        return float(np.mean(self.post_burn_in(burn_in_fraction)[1]))


def ks_curve(
    kernel_spec: KernelSpec,
    target: LogTarget,
    x0,
    iters: int,
    N: int = 100,
    coordinate_policy=CoordinatePolicy.AVERAGE_OVER_COORDINATES,
    rng_seed: int = 0,
    record_every: int = 1,
) -> KSCurve:
    """Run ``N`` chains seeded ``rng_seed + i`` and track their K-S distance.

    ``x0`` is either one starting point shared by every replicate or an
    ``(N, d)`` array of starting points.  Samples are pushed through
    ``target.to_original`` before the comparison with the target marginals.
    """
    if N < 1:
        raise ValueError("need at least one replicate")
    policy = CoordinatePolicy(coordinate_policy)
    its, vals, accs = [], [], []

    def on_record(it, st):
        x = target.to_original(st.emitted)
        if policy is CoordinatePolicy.FIRST_COORDINATE:
            F = np.asarray(target.marginal_cdf(0)(x[:, 0]), dtype=float)[:, None]
        else:
            F = target.marginal_cdf_all(x)
        its.append(it)
        vals.append(float(np.mean(_ks_from_cdf_values(F))))
        accs.append(100.0 * st.accepts.sum() / (st.proposals * N) if st.proposals else float("nan"))

    st = run_chains(kernel_spec, target, x0, iters, [rng_seed + i for i in range(N)], record_every, on_record)
    return KSCurve(its, vals, N, policy, accs, st.stats())


def convergence_iteration(curve: KSCurve, tol: float = 0.1, plateau_fraction: float = 0.5) -> int:
    """First recorded iteration whose K-S is within ``tol`` of the final plateau.

    The plateau is the mean K-S over the last ``plateau_fraction`` of the
    recorded iterations.
    """
    it = np.asarray(curve.iterations)
    ks = np.asarray(curve.ks)
    plateau = float(np.mean(ks[it >= (1.0 - plateau_fraction) * it[-1]]))
    hit = np.nonzero(ks <= (1.0 + tol) * plateau)[0]
    return int(it[hit[0]])


def ks_noise_floor(N: int) -> float:
    """Median of the K-S statistic of an exact ``N``-sample, ``~0.84 / sqrt(N)``."""
    return 0.8276 / np.sqrt(N)


# ---------------------------------------------------------------------------
# acceptance


def acceptance_rate(stats: AcceptanceStats) -> float:
    """Percentage of accepted proposals."""
    if stats.proposals <= 0:
        raise ValueError("no proposals recorded")
    return 100.0 * stats.accepts / stats.proposals


# ---------------------------------------------------------------------------
# drift ratio


@dataclass
class DriftReport:
    probe_points: list
    ratios: list
    mc_samples: int
    std_errors: list

    @property
    def x_norms(self) -> list:
        return [float(np.linalg.norm(p)) for p in self.probe_points]


def _drift_terms(lx, ly, ljac, lmove):
    with np.errstate(invalid="ignore"):
        delta = ly - lx + ljac + lmove
    delta = np.where(np.isnan(delta), -np.inf, delta)
    log_alpha = np.minimum(0.0, delta)
    alpha = np.exp(log_alpha)
    # alpha * sqrt(pi(x) / pi(y)), computed in log space; zero when pi(y) = 0
    with np.errstate(invalid="ignore"):
        moved = np.where(np.isfinite(ly), np.exp(log_alpha + 0.5 * (lx - ly)), 0.0)
    return moved + (1.0 - alpha)


def _enumerated(kind, eng, x, lx, draws, m):
    d = x.size
    if kind is KernelKind.ADDITIVE:
        p = eng.p
        pats = np.array(list(itertools.product((1.0, -1.0), repeat=d)))
        y_cnt = (pats > 0).sum(1)
        w = p**y_cnt * (1.0 - p) ** (d - y_cnt)
        eps = eng.sd * np.abs(draws["ez"])
        lm = log_move_ratio(pats, (p, 0.0), "additive")
        ys = x[None, None, :] + pats[None, :, :] * eps[:, None, None]
        ljac = 0.0
    else:
        p, q = eng.pm, eng.qm
        pats = np.array(list(itertools.product((1.0, 0.0, -1.0), repeat=d)))
        y_cnt = (pats > 0).sum(1)
        z_cnt = (pats == 0).sum(1)
        w = p**y_cnt * q**z_cnt * (1.0 - p - q) ** (d - y_cnt - z_cnt)
        eps = multiplicative_epsilon_from_uniforms(eng.eps2, draws["em"], draws["es"])
        lm = log_move_ratio(pats, (p, q), "multiplicative")
        e = eps[:, None, None]
        ys = np.where(pats > 0, x * e, np.where(pats < 0, x / e, x))
        ljac = pats.sum(1)[None, :] * np.log(np.abs(eps))[:, None]
    ly = eng.target.log_density(ys.reshape(-1, d)).reshape(m, -1)
    g = _drift_terms(lx, ly, ljac, lm[None, :])
    return g @ w


def drift_ratio(kernel_spec: KernelSpec, target: LogTarget, x, mc_samples: int, rng,
                enumerate_moves: Optional[bool] = None) -> tuple[float, float]:
    """Monte-Carlo estimate of ``PV(x) / V(x)`` with ``V = c / sqrt(pi)``.

    The integrand is ``alpha * sqrt(pi(x) / pi(y)) + (1 - alpha)`` where
    ``alpha`` is the acceptance probability of proposal ``y`` (Jacobian and
    move-type terms included).  For additive and multiplicative kernels in
    ``d <= 8`` the move type is summed out exactly and only epsilon is
    sampled; otherwise ``(b, epsilon)`` are sampled jointly.

    Returns
    -------
    (estimate, standard error)
    """
    x = np.asarray(x, dtype=float)
    lx = target.log_density(x)
    if not np.isfinite(lx):
        raise ValueError("target density is zero at x")
    if mc_samples < 2:
        raise ValueError("need at least two Monte-Carlo samples")
    eng = make_engine(kernel_spec, target)
    kind = kernel_spec.kind
    if kind is KernelKind.ESSENTIAL_P:
        raise ValueError("drift ratios are defined for single-target kernels")
    if enumerate_moves is None:
        enumerate_moves = kind in (KernelKind.ADDITIVE, KernelKind.MULTIPLICATIVE) and x.size <= 8
    draws = eng.draw(rng, mc_samples)
    if enumerate_moves:
        vals = np.empty(mc_samples)
        # keep the pattern-by-sample block near a few million entries
        n_pat = 2**x.size if kind is KernelKind.ADDITIVE else 3**x.size
        step = max(1, 2**21 // (n_pat * x.size))
        for s in range(0, mc_samples, step):
            sub = {k: v[s:s + step] for k, v in draws.items()}
            vals[s:s + step] = _enumerated(kind, eng, x, lx, sub, len(sub["u"]))
    else:
        y, ljac, lm = eng.propose(np.broadcast_to(x, (mc_samples, x.size)).copy(), draws)
        ly = target.log_density(y)
        vals = _drift_terms(lx, ly, ljac, lm)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(mc_samples))


def drift_report(kernel_spec, target, points, mc_samples: int, rng) -> DriftReport:
    ratios, errs = [], []
    for p in points:
        r, e = drift_ratio(kernel_spec, target, p, mc_samples, rng)
        ratios.append(r)
        errs.append(e)
    return DriftReport([np.asarray(p, dtype=float) for p in points], ratios, mc_samples, errs)


# ---------------------------------------------------------------------------
# mass of the central box


@dataclass(frozen=True)
class PiN0Estimate:
    value: float
    n1: int
    n2: int
    halfwidth: float
    log_value: float = 0.0


def exact_pi_N0_gaussian(dim: int, a: float = 0.1) -> float:
    """Box mass ``(2 Phi(a) - 1)^d`` of the standard normal."""
    return float((2.0 * ndtr(a) - 1.0) ** dim)


def estimate_pi_N0(log_l: Callable, a: float, dim: int, n1: int = 100_000, n2: int = 100_000,
                   rng=None, heavy_tail: Optional[LogTarget] = None) -> PiN0Estimate:
    """Importance-sampling estimate of the target mass of ``[-a, a]^d``.

    Parameters
    ----------
    log_l : callable
        Unnormalized log target, evaluated on ``(n, d)`` batches.
    a : float
        Box half-width.
    dim : int
    n1, n2 : int
        Uniform draws on the box and heavy-tailed draws for the complement.
    heavy_tail : LogTarget with ``sample``, optional
        Importance density for the complement; multivariate t with three
        degrees of freedom and identity scale by default.  Draws landing
        inside the box get weight zero, which is the same as sampling from
        the density restricted to the complement.

    Notes
    -----
    Both sums are formed in log space, so a constant factor in ``log_l``
    cancels up to rounding.
    """
    if not a > 0:
        raise ValueError(f"halfwidth must be positive, got {a!r}")
    if n1 < 1 or n2 < 1:
        raise ValueError("need positive sample counts")
    rng = np.random.default_rng() if rng is None else rng
    g = StudentTTarget(3.0, np.zeros(dim)) if heavy_tail is None else heavy_tail
    u = rng.uniform(-a, a, size=(n1, dim))
    log_inner = logsumexp(np.asarray(log_l(u), dtype=float)) - np.log(n1) + dim * np.log(2.0 * a)
    v = g.sample(rng, n2)
    outside = np.max(np.abs(v), axis=1) > a
    if np.any(outside):
        vo = v[outside]
        lw = np.asarray(log_l(vo), dtype=float) - g.log_density(vo)
        log_outer = logsumexp(lw) - np.log(n2)
    else:
        log_outer = -np.inf
    log_total = np.logaddexp(log_inner, log_outer)
    if not np.isfinite(log_total):
        raise ValueError("all importance weights are zero; target and samplers do not overlap")
    log_value = float(log_inner - log_total)
    return PiN0Estimate(float(np.exp(log_value)), n1, n2, float(a), log_value)


# ---------------------------------------------------------------------------
# CSV output


def _fmt(v) -> str:
    return repr(float(v))


def write_ks_csv(curve: KSCurve, path) -> None:
    acc = curve.acceptance if curve.acceptance else [float("nan")] * len(curve.ks)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "ks", "acceptance_rate"])
        for it, k, a in zip(curve.iterations, curve.ks, acc):
            w.writerow([int(it), _fmt(k), _fmt(a)])


def write_drift_csv(report: DriftReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_norm", "ratio", "stderr"])
        for n, r, e in zip(report.x_norms, report.ratios, report.std_errors):
            w.writerow([_fmt(n), _fmt(r), _fmt(e)])
