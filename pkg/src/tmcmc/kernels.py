"""Metropolis-type transition kernels.

Every kernel is implemented once, in a form that advances a batch of ``n``
independent chains by one step.  The single-chain ``step_*`` functions are thin
wrappers around that batched core with ``n = 1``, and :func:`run_chains` uses it
to drive many replicate chains at once.

The random input of a step is drawn up front by ``_Engine.draw`` as a small
dict of uniform and normal arrays, so a chain's trajectory depends only on its
own generator.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .proposals import (
    EpsilonKind,
    EpsilonProposal,
    MoveType,
    check_move_probs,
    move_type_from_uniforms,
    multiplicative_epsilon_from_uniforms,
)
from .targets import BoxRestrictedTarget, LogTarget


class KernelKind(str, enum.Enum):
    RWMH = "rwmh"
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    ADDMULT = "addmult"
    MIXTURE_STAR = "mixture_star"
    ESSENTIAL_P = "essential_p"


_REQUIRED = {
    KernelKind.RWMH: {"scale"},
    KernelKind.ADDITIVE: {"scale"},
    KernelKind.MULTIPLICATIVE: {"mult_epsilon"},
    KernelKind.ADDMULT: {"scale", "mult_epsilon", "addmult_partition"},
    KernelKind.MIXTURE_STAR: {"scale", "mult_epsilon", "mixing_weight"},
    KernelKind.ESSENTIAL_P: {"scale", "mult_epsilon", "n0_halfwidth", "pi_n0"},
}
_OPTIONAL = {
    KernelKind.RWMH: set(),
    KernelKind.ADDITIVE: {"add_p"},
    KernelKind.MULTIPLICATIVE: {"mult_probs"},
    KernelKind.ADDMULT: {"add_p", "mult_probs"},
    KernelKind.MIXTURE_STAR: {"add_p", "mult_probs"},
    KernelKind.ESSENTIAL_P: {"add_p", "mult_probs"},
}
_FIELDS = (
    "scale", "mult_epsilon", "add_p", "mult_probs", "mixing_weight",
    "n0_halfwidth", "pi_n0", "addmult_partition",
)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice plus its parameters.

    Parameters
    ----------
    kind : KernelKind
    scale : float, optional
        Proposal scale ``l``.  RWMH increments and the additive epsilon both
        have per-coordinate standard deviation ``l / sqrt(d)``.
    mult_epsilon : EpsilonProposal, optional
        Restricted step distribution for multiplicative moves.
    add_p : float, optional
        ``P(b_i = +1)`` for additive moves; 1/2 when unset.
    mult_probs : (float, float), optional
        ``(p, q)`` for multiplicative moves; (1/3, 1/3) when unset.
    mixing_weight : float, optional
        Probability of an additive step in the traditional mixture.
    n0_halfwidth, pi_n0 : float, optional
        Half-width ``a`` of the central box and its target probability, for
        the essentially-fully-multiplicative mixture.
    addmult_partition : sequence of int, optional
        Coordinates that receive multiplicative moves in the add-mult kernel.

    Exactly the fields a kind requires (plus its optional move
    probabilities) may be set; anything else raises ``ValueError``.
    """

    kind: KernelKind
    scale: Optional[float] = None
    mult_epsilon: Optional[EpsilonProposal] = None
    add_p: Optional[float] = None
    mult_probs: Optional[tuple] = None
    mixing_weight: Optional[float] = None
    n0_halfwidth: Optional[float] = None
    pi_n0: Optional[float] = None
    addmult_partition: Optional[tuple] = None

    def __post_init__(self):
        kind = KernelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        given = {f for f in _FIELDS if getattr(self, f) is not None}
        missing = _REQUIRED[kind] - given
        extra = given - _REQUIRED[kind] - _OPTIONAL[kind]
        if missing:
            raise ValueError(f"{kind.value} kernel needs {sorted(missing)}")
        if extra:
            raise ValueError(f"{kind.value} kernel does not take {sorted(extra)}")
        if self.scale is not None and not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale!r}")
        if self.mult_epsilon is not None and self.mult_epsilon.kind is not EpsilonKind.RESTRICTED_UNIT_INTERVAL:
            raise ValueError("mult_epsilon must be a RESTRICTED_UNIT_INTERVAL proposal")
        if self.add_p is not None:
            check_move_probs((self.add_p, 0.0), "additive")
        if self.mult_probs is not None:
            object.__setattr__(self, "mult_probs", check_move_probs(self.mult_probs, "multiplicative"))
        if self.mixing_weight is not None and not 0.0 < self.mixing_weight < 1.0:
            raise ValueError(f"mixing_weight must lie in (0, 1), got {self.mixing_weight!r}")
        if self.n0_halfwidth is not None and not self.n0_halfwidth > 0:
            raise ValueError(f"n0_halfwidth must be positive, got {self.n0_halfwidth!r}")
        if self.pi_n0 is not None and not 0.0 < self.pi_n0 < 1.0:
            raise ValueError(f"pi_n0 must lie in (0, 1), got {self.pi_n0!r}")
        if self.addmult_partition is not None:
            part = tuple(sorted({int(i) for i in self.addmult_partition}))
            if not part:
                raise ValueError("addmult_partition must be nonempty")
            object.__setattr__(self, "addmult_partition", part)

    @property
    def p_add(self) -> float:
        return 0.5 if self.add_p is None else float(self.add_p)

    @property
    def pq_mult(self) -> tuple[float, float]:
        return (1.0 / 3.0, 1.0 / 3.0) if self.mult_probs is None else self.mult_probs

    def additive_epsilon(self, dim: int) -> EpsilonProposal:
        return EpsilonProposal.half_normal(self.scale / np.sqrt(dim))


@dataclass
class AcceptanceStats:
    proposals: int = 0
    accepts: int = 0
    sub: dict = field(default_factory=dict)

    def record(self, accepted: bool, name: Optional[str] = None, count: bool = True):
        if count:
            self.proposals += 1
            self.accepts += int(accepted)
        if name is not None:
            c = self.sub.setdefault(name, [0, 0])
            c[0] += 1
            c[1] += int(accepted)

    def merge(self, other: "AcceptanceStats") -> "AcceptanceStats":
        out = AcceptanceStats(self.proposals + other.proposals, self.accepts + other.accepts,
                              {k: list(v) for k, v in self.sub.items()})
        for k, (p, a) in other.sub.items():
            c = out.sub.setdefault(k, [0, 0])
            c[0] += p
            c[1] += a
        return out


@dataclass
class ChainState:
    x: np.ndarray
    log_pi_x: float
    iteration: int = 0
    stats: AcceptanceStats = field(default_factory=AcceptanceStats)


# ---------------------------------------------------------------------------
# transforms and acceptance


def _b_array(b) -> np.ndarray:
    return np.asarray(b.b if isinstance(b, MoveType) else b, dtype=float)


def additive_transform(x, b, eps: float) -> np.ndarray:
    """``y_i = x_i + b_i * eps``; the Jacobian is one."""
    b = _b_array(b)
    if not np.all(np.abs(b) == 1.0):
        raise ValueError("additive move types take values in {-1, +1}")
    return np.asarray(x, dtype=float) + b * eps


def multiplicative_transform(x, b, eps: float) -> tuple[np.ndarray, float]:
    """``y_i = x_i * eps**b_i`` together with ``log|J| = sum(b) * log|eps|``."""
    b = _b_array(b)
    if eps == 0:
        raise ValueError("multiplicative moves need eps != 0")
    if not np.all(np.isin(b, (-1.0, 0.0, 1.0))):
        raise ValueError("multiplicative move types take values in {-1, 0, +1}")
    x = np.asarray(x, dtype=float)
    y = np.where(b > 0, x * eps, np.where(b < 0, x / eps, x))
    return y, float(np.sum(b)) * float(np.log(abs(eps)))


def _is_uniform(alphabet: str, p: float, q: float) -> bool:
    if alphabet == "additive":
        return p == 0.5
    return abs((1.0 - p - q) - p) < 1e-15


def log_move_ratio(b, probs, alphabet: str):
    """log of P(reverse move type) / P(forward move type).

    The reverse of a move with type ``b`` is the move with type ``-b``.  With
    ``Y = #{b_i = +1}`` and ``Z = #{b_i = 0}`` this is
    ``(d - 2Y) log(p / (1 - p))`` for additive moves and
    ``(2Y + Z - d) log((1 - p - q) / p)`` for multiplicative moves.  It is
    exactly zero for ``p = 1/2`` (additive) and ``2p + q = 1`` (multiplicative).
    Accepts a single ``b`` or a batch of shape ``(n, d)``.
    """
    p, q = check_move_probs(probs, alphabet)
    b = _b_array(b)
    if _is_uniform(alphabet, p, q):
        return 0.0 if b.ndim == 1 else np.zeros(b.shape[0])
    d = b.shape[-1]
    y = np.count_nonzero(b > 0, axis=-1)
    if alphabet == "additive":
        return (d - 2 * y) * np.log(p / (1.0 - p))
    z = np.count_nonzero(b == 0, axis=-1)
    return (2 * y + z - d) * np.log((1.0 - p - q) / p)


def _accept_prob(log_pi_x, log_pi_y, log_abs_jacobian, log_move_ratio):
    with np.errstate(invalid="ignore"):
        delta = np.asarray(log_pi_y - log_pi_x + log_abs_jacobian + log_move_ratio, dtype=float)
    delta = np.where(np.isnan(delta), -np.inf, delta)
    return np.exp(np.minimum(0.0, delta))


def mh_accept(log_pi_x, log_pi_y, log_abs_jacobian, log_move_ratio, rng) -> bool:
    """Metropolis-Hastings decision: accept iff ``u < min(1, exp(delta))``, ``u ~ U[0, 1)``."""
    if not np.isfinite(log_pi_x):
        raise ValueError("current state has zero target density")
    alpha = float(_accept_prob(log_pi_x, log_pi_y, log_abs_jacobian, log_move_ratio))
    return bool(rng.random() < alpha)


# ---------------------------------------------------------------------------
# batched core


@dataclass
class EnsembleState:
    """State of ``n`` chains advanced in lockstep.

    ``chains`` holds one ``[x, log_pi]`` pair per sub-chain (two for the
    essentially-fully-multiplicative mixture, one otherwise) and ``emitted``
    is the sample reported at the current iteration.
    """

    chains: list
    emitted: np.ndarray
    iteration: int = 0
    proposals: int = 0
    accepts: Optional[np.ndarray] = None
    sub: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.accepts is None:
            self.accepts = np.zeros(self.emitted.shape[0], dtype=np.int64)

    def _bump(self, name, accepted, mask=None):
        n = accepted.shape[0]
        c = self.sub.setdefault(name, [np.zeros(n, np.int64), np.zeros(n, np.int64)])
        if mask is None:
            c[0] += 1
            c[1] += accepted
        else:
            c[0] += mask
            c[1] += accepted & mask

    def stats(self, i: Optional[int] = None) -> AcceptanceStats:
        """Counters of chain ``i``, or pooled over all chains when ``i`` is None."""
        pick = (lambda a: int(a.sum())) if i is None else (lambda a: int(a[i]))
        n = 1 if i is not None else self.emitted.shape[0]
        return AcceptanceStats(
            self.proposals * n, pick(self.accepts), {k: [pick(p), pick(a)] for k, (p, a) in self.sub.items()}
        )


class _Engine:
    def __init__(self, spec: KernelSpec, target: LogTarget):
        self.spec = spec
        self.target = target
        self.kind = spec.kind
        d = self.dim = target.dim
        if spec.scale is not None:
            self.sd = spec.scale / np.sqrt(d)
        self.p = spec.p_add
        self.pm, self.qm = spec.pq_mult
        self.eps2 = spec.mult_epsilon
        if self.kind is KernelKind.ADDMULT:
            part = np.array(spec.addmult_partition)
            if part[-1] >= d or part[0] < 0:
                raise ValueError(f"addmult_partition indices must lie in [0, {d})")
            if part.size == d:
                raise ValueError("addmult_partition must be a proper subset of the coordinates")
            self.mmask = np.zeros(d, dtype=bool)
            self.mmask[part] = True
        if self.kind is KernelKind.ESSENTIAL_P:
            a = spec.n0_halfwidth
            self.inner = BoxRestrictedTarget(target, a, inside=True, mass=spec.pi_n0)
            self.outer = BoxRestrictedTarget(target, a, inside=False, mass=spec.pi_n0)

    # -- random input ------------------------------------------------------
    def draw(self, rng: np.random.Generator, n: int) -> dict:
        d, k = self.dim, self.kind
        if k is KernelKind.RWMH:
            return {"z": rng.standard_normal((n, d)), "u": rng.random(n)}
        if k is KernelKind.ADDITIVE:
            return {"bu": rng.random((n, d)), "ez": rng.standard_normal(n), "u": rng.random(n)}
        if k is KernelKind.MULTIPLICATIVE:
            return {"bu": rng.random((n, d)), "em": rng.random(n), "es": rng.random(n), "u": rng.random(n)}
        if k is KernelKind.ADDMULT:
            return {"bu": rng.random((n, d)), "ez": rng.standard_normal(n), "em": rng.random(n),
                    "es": rng.random(n), "u": rng.random(n)}
        if k is KernelKind.MIXTURE_STAR:
            return {"sel": rng.random(n), "bu": rng.random((n, d)), "ez": rng.standard_normal(n),
                    "em": rng.random(n), "es": rng.random(n), "u": rng.random(n)}
        return {"bu": rng.random((n, d)), "ez": rng.standard_normal(n), "u": rng.random(n),
                "bu2": rng.random((n, d)), "em": rng.random(n), "es": rng.random(n),
                "u2": rng.random(n), "sel": rng.random(n)}

    # -- proposals ---------------------------------------------------------
    def _additive(self, x, bu, ez):
        b = move_type_from_uniforms(bu, self.p, 0.0)
        y = x + b * (self.sd * np.abs(ez))[:, None]
        return y, 0.0, log_move_ratio(b, (self.p, 0.0), "additive")

    def _multiplicative(self, x, bu, em, es):
        b = move_type_from_uniforms(bu, self.pm, self.qm)
        eps = multiplicative_epsilon_from_uniforms(self.eps2, em, es)[:, None]
        y = np.where(b > 0, x * eps, np.where(b < 0, x / eps, x))
        ljac = b.sum(axis=1) * np.log(np.abs(eps[:, 0]))
        return y, ljac, log_move_ratio(b, (self.pm, self.qm), "multiplicative")

    def _addmult(self, x, bu, ez, em, es):
        m = self.mmask
        ya, _, lma = self._additive(x[:, ~m], bu[:, ~m], ez)
        ym, ljac, lmm = self._multiplicative(x[:, m], bu[:, m], em, es)
        y = np.empty_like(x)
        y[:, ~m] = ya
        y[:, m] = ym
        return y, ljac, lma + lmm

    def propose(self, x, r: dict):
        """Proposals ``(y, log|J|, log move ratio)`` for a single-target kernel."""
        k = self.kind
        if k is KernelKind.RWMH:
            return x + self.sd * r["z"], 0.0, 0.0
        if k is KernelKind.ADDITIVE:
            return self._additive(x, r["bu"], r["ez"])
        if k is KernelKind.MULTIPLICATIVE:
            return self._multiplicative(x, r["bu"], r["em"], r["es"])
        if k is KernelKind.ADDMULT:
            return self._addmult(x, r["bu"], r["ez"], r["em"], r["es"])
        if k is KernelKind.MIXTURE_STAR:
            sel = r["sel"] < self.spec.mixing_weight
            ya, _, lma = self._additive(x, r["bu"], r["ez"])
            ym, ljm, lmm = self._multiplicative(x, r["bu"], r["em"], r["es"])
            return np.where(sel[:, None], ya, ym), np.where(sel, 0.0, ljm), np.where(sel, lma, lmm)
        raise ValueError("the essential_p mixture has no single proposal")

    @staticmethod
    def _mh(target, pair, y, ljac, lmove, u):
        x, lp = pair
        ly = target.log_density(y)
        acc = u < _accept_prob(lp, ly, ljac, lmove)
        x[acc] = y[acc]
        lp[acc] = ly[acc]
        return acc

    # -- one step for every chain -------------------------------------------
    def advance(self, st: EnsembleState, r: dict) -> EnsembleState:
        k, t = self.kind, self.target
        if k is KernelKind.ESSENTIAL_P:
            one, two = st.chains
            acc1 = self._mh(self.inner, one, *self._additive(one[0], r["bu"], r["ez"]), r["u"])
            acc2 = self._mh(self.outer, two, *self._multiplicative(two[0], r["bu2"], r["em"], r["es"]), r["u2"])
            sel = r["sel"] < self.spec.pi_n0
            st.emitted = np.where(sel[:, None], one[0], two[0])
            acc = np.where(sel, acc1, acc2)
            st._bump("additive", acc1)
            st._bump("multiplicative", acc2)
            st._bump("emitted_additive", acc1, sel)
        else:
            pair = st.chains[0]
            x = pair[0]
            acc = self._mh(t, pair, *self.propose(x, r), r["u"])
            if k is KernelKind.MIXTURE_STAR:
                sel = r["sel"] < self.spec.mixing_weight
                st._bump("additive", acc, sel)
                st._bump("multiplicative", acc, ~sel)
            st.emitted = x
        st.proposals += 1
        st.accepts += acc
        st.iteration += 1
        return st

    # -- initialization ------------------------------------------------------
    def _pair(self, target, x):
        lp = np.asarray(target.log_density(x), dtype=float)
        if not np.all(np.isfinite(lp)):
            bad = x[~np.isfinite(lp)][0]
            raise ValueError(f"initial state has zero target density: x={bad.tolist()}")
        return [x, lp]

    def init(self, x0) -> EnsembleState:
        x0 = np.array(np.atleast_2d(x0), dtype=float)
        if x0.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: target has dim {self.dim}, got {x0.shape[1]}")
        k = self.kind
        if k in (KernelKind.MULTIPLICATIVE, KernelKind.ESSENTIAL_P) and np.any(x0 == 0):
            raise ValueError("multiplicative chains cannot start with a zero coordinate")
        if k is KernelKind.ADDMULT and np.any(x0[:, self.mmask] == 0):
            raise ValueError("coordinates receiving multiplicative moves cannot start at zero")
        if k is KernelKind.ESSENTIAL_P:
            a = self.spec.n0_halfwidth
            # clip: the rescaled point can overshoot the box by one ulp
            x_in = np.clip(x0 * (a / np.max(np.abs(x0), axis=1, keepdims=True)), -a, a)
            chains = [self._pair(self.inner, x_in), self._pair(self.outer, x0.copy())]
            return EnsembleState(chains, x0.copy())
        pair = self._pair(self.target, x0)
        return EnsembleState([pair], pair[0])


def make_engine(spec: KernelSpec, target: LogTarget) -> _Engine:
    return _Engine(spec, target)


# ---------------------------------------------------------------------------
# single-chain interface


def init_state(spec: KernelSpec, target: LogTarget, x0):
    """Initial single-chain state; an :class:`EssentialPState` for the P mixture."""
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1:
        raise ValueError("x0 must be a single point of shape (d,)")
    eng = _Engine(spec, target)
    ens = eng.init(x0)
    if spec.kind is KernelKind.ESSENTIAL_P:
        return EssentialPState._from_ensemble(eng, ens)
    return ChainState(ens.chains[0][0][0].copy(), float(ens.chains[0][1][0]))


def _single(kind: KernelKind, state: ChainState, target, spec: KernelSpec, rng) -> ChainState:
    if spec.kind is not kind:
        raise ValueError(f"expected a {kind.value} kernel spec, got {spec.kind.value}")
    if not np.isfinite(state.log_pi_x):
        raise ValueError("current state has zero target density")
    eng = _Engine(spec, target)
    ens = EnsembleState([[state.x[None, :].copy(), np.array([state.log_pi_x])]], state.x[None, :])
    eng.advance(ens, eng.draw(rng, 1))
    accepted = bool(ens.accepts[0])
    state.x = ens.chains[0][0][0]
    state.log_pi_x = float(ens.chains[0][1][0])
    state.iteration += 1
    if kind is KernelKind.MIXTURE_STAR:
        name = "additive" if ens.sub["additive"][0][0] else "multiplicative"
        state.stats.record(accepted, name)
    else:
        state.stats.record(accepted)
    return state


def step_rwmh(state, target, spec, rng):
    """One random-walk Metropolis step with Gaussian increments of sd ``scale / sqrt(d)``."""
    return _single(KernelKind.RWMH, state, target, spec, rng)


def step_additive(state, target, spec, rng):
    """One additive TMCMC step: a single epsilon added to or subtracted from every coordinate."""
    return _single(KernelKind.ADDITIVE, state, target, spec, rng)


def step_multiplicative(state, target, spec, rng):
    """One multiplicative TMCMC step; the Jacobian enters the acceptance ratio."""
    return _single(KernelKind.MULTIPLICATIVE, state, target, spec, rng)


def step_addmult(state, target, spec, rng):
    """Multiplicative moves on ``addmult_partition``, additive moves on the rest."""
    return _single(KernelKind.ADDMULT, state, target, spec, rng)


def step_mixture_star(state, target, spec, rng):
    """Additive step with probability ``mixing_weight``, multiplicative step otherwise."""
    return _single(KernelKind.MIXTURE_STAR, state, target, spec, rng)


@dataclass
class EssentialPState:
    """Two sub-chains of the essentially-fully-multiplicative mixture.

    ``additive`` targets the target restricted to the box [-a, a]^d and
    ``multiplicative`` targets its restriction to the complement.  ``stats``
    counts acceptances of whichever sub-chain was emitted.
    """

    additive: ChainState
    multiplicative: ChainState
    selected: np.ndarray
    iteration: int = 0
    stats: AcceptanceStats = field(default_factory=AcceptanceStats)

    @classmethod
    def _from_ensemble(cls, eng, ens):
        (x1, l1), (x2, l2) = ens.chains
        return cls(ChainState(x1[0].copy(), float(l1[0])), ChainState(x2[0].copy(), float(l2[0])),
                   ens.emitted[0].copy())


def step_essential_p(two_state: EssentialPState, target, spec, rng):
    """Advance both sub-chains once; return ``(selected, two_state)``."""
    if spec.kind is not KernelKind.ESSENTIAL_P:
        raise ValueError(f"expected an essential_p kernel spec, got {spec.kind.value}")
    eng = _Engine(spec, target)
    a, m = two_state.additive, two_state.multiplicative
    ens = EnsembleState([[a.x[None, :].copy(), np.array([a.log_pi_x])],
                         [m.x[None, :].copy(), np.array([m.log_pi_x])]], two_state.selected[None, :])
    eng.advance(ens, eng.draw(rng, 1))
    for sub, (x, lp), name in zip((a, m), ens.chains, ("additive", "multiplicative")):
        sub.x, sub.log_pi_x = x[0], float(lp[0])
        sub.iteration += 1
        sub.stats.record(bool(ens.sub[name][1][0]))
    picked = "additive" if ens.sub["emitted_additive"][0][0] else "multiplicative"
    two_state.selected = ens.emitted[0].copy()
    two_state.iteration += 1
    two_state.stats.record(bool(ens.accepts[0]), picked)
    return two_state.selected, two_state


_STEPS = {
    KernelKind.RWMH: step_rwmh,
    KernelKind.ADDITIVE: step_additive,
    KernelKind.MULTIPLICATIVE: step_multiplicative,
    KernelKind.ADDMULT: step_addmult,
    KernelKind.MIXTURE_STAR: step_mixture_star,
}


def step(state, target, spec: KernelSpec, rng):
    """Dispatch on ``spec.kind``; returns the updated state."""
    if spec.kind is KernelKind.ESSENTIAL_P:
        return step_essential_p(state, target, spec, rng)[1]
    return _STEPS[spec.kind](state, target, spec, rng)


# ---------------------------------------------------------------------------
# many chains


def run_chains(
    spec: KernelSpec,
    target: LogTarget,
    x0,
    iters: int,
    seeds: Sequence[int],
    record_every: int = 1,
    on_record: Optional[Callable[[int, "EnsembleState"], None]] = None,
    chunk: Optional[int] = None,
) -> EnsembleState:
    """Run ``len(seeds)`` independent chains for ``iters`` steps.

    Chain ``i`` draws all its randomness from ``default_rng(seeds[i])``, in
    blocks of ``chunk`` steps.  ``on_record(iteration, state)`` is called at
    iteration 0 and then every ``record_every`` steps; ``state.emitted`` is the
    ``(n, d)`` array of current samples and must not be modified.
    """
    if iters < 0 or record_every < 1:
        raise ValueError("need iters >= 0 and record_every >= 1")
    eng = _Engine(spec, target)
    n = len(seeds)
    x0 = np.asarray(x0, dtype=float)
    x0 = np.broadcast_to(x0, (n, target.dim)) if x0.ndim == 1 else x0
    if x0.shape != (n, target.dim):
        raise ValueError(f"x0 must have shape ({target.dim},) or ({n}, {target.dim})")
    st = eng.init(x0)
    rngs = [np.random.default_rng(s) for s in seeds]
    if chunk is None:
        chunk = int(max(1, min(256, 2**21 // max(1, n * target.dim))))
    if on_record is not None:
        on_record(0, st)
    done = 0
    while done < iters:
        k = min(chunk, iters - done)
        blocks = [eng.draw(r, k) for r in rngs]
        draws = {key: np.stack([b[key] for b in blocks], axis=1) for key in blocks[0]}
        for j in range(k):
            eng.advance(st, {key: v[j] for key, v in draws.items()})
            done += 1
            if on_record is not None and done % record_every == 0:
                on_record(done, st)
    return st
