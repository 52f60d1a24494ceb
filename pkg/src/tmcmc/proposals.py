"""Step distributions for the TMCMC kernels and the random-walk baseline."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri


class EpsilonKind(enum.Enum):
    POSITIVE_HALF_LINE = "positive-half-line"
    RESTRICTED_UNIT_INTERVAL = "restricted-unit-interval"


@dataclass(frozen=True)
class EpsilonProposal:
    """One-dimensional step distribution.

    ``POSITIVE_HALF_LINE`` is the half-normal ``|z|, z ~ N(0, scale^2)`` used by
    additive moves.  ``RESTRICTED_UNIT_INTERVAL`` is the symmetric two-component
    mixture ``1/2 N(mu, sigma^2) on [l1, l2] + 1/2 N(-mu, sigma^2) on [-l2, -l1]``
    used by multiplicative moves; it gives zero mass to (-l1, l1) and to the
    neighbourhoods (l2, 1] and [-1, -l2) of +-1.
    """

    kind: EpsilonKind
    scale: float = 1.0
    mu: float = 0.35
    sigma: float = 1.0
    l1: float = 0.05
    l2: float = 0.95
    _cdf_lo: float = field(init=False, repr=False, compare=False, default=0.0)
    _cdf_hi: float = field(init=False, repr=False, compare=False, default=1.0)

    def __post_init__(self):
        if self.kind is EpsilonKind.POSITIVE_HALF_LINE:
            if not self.scale > 0:
                raise ValueError(f"scale must be positive, got {self.scale!r}")
            return
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not 0.0 < self.l1 < self.l2 < 1.0:
            raise ValueError(f"need 0 < l1 < l2 < 1, got l1={self.l1!r}, l2={self.l2!r}")
        object.__setattr__(self, "_cdf_lo", float(ndtr((self.l1 - self.mu) / self.sigma)))
        object.__setattr__(self, "_cdf_hi", float(ndtr((self.l2 - self.mu) / self.sigma)))
        if not self._cdf_hi > self._cdf_lo:
            raise ValueError("truncation interval carries no probability mass")

    @classmethod
    def half_normal(cls, scale: float) -> "EpsilonProposal":
        return cls(EpsilonKind.POSITIVE_HALF_LINE, scale=scale)

    @classmethod
    def restricted(cls, mu=0.35, sigma=1.0, l1=0.05, l2=0.95) -> "EpsilonProposal":
        return cls(EpsilonKind.RESTRICTED_UNIT_INTERVAL, mu=mu, sigma=sigma, l1=l1, l2=l2)

    def magnitude_mean(self) -> float:
        """Closed-form mean of |epsilon|."""
        if self.kind is EpsilonKind.POSITIVE_HALF_LINE:
            return self.scale * np.sqrt(2.0 / np.pi)
        a = (self.l1 - self.mu) / self.sigma
        b = (self.l2 - self.mu) / self.sigma
        phi = lambda z: np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
        return self.mu + self.sigma * (phi(a) - phi(b)) / (self._cdf_hi - self._cdf_lo)


def sample_additive_epsilon(prop: EpsilonProposal, rng: np.random.Generator) -> float:
    if prop.kind is not EpsilonKind.POSITIVE_HALF_LINE:
        raise ValueError("additive moves need a POSITIVE_HALF_LINE proposal")
    eps = abs(prop.scale * rng.standard_normal())
    # z == 0 has probability zero but would stall the move
    while eps == 0.0:
        eps = abs(prop.scale * rng.standard_normal())
    return eps


def multiplicative_epsilon_from_uniforms(prop: EpsilonProposal, u_mag, u_sign) -> np.ndarray:
    """Vectorized inverse-CDF map from two uniform streams to epsilon draws."""
    u = prop._cdf_lo + (prop._cdf_hi - prop._cdf_lo) * np.asarray(u_mag, dtype=float)
    m = prop.mu + prop.sigma * ndtri(u)
    # rounding in ndtri can land a hair outside the interval
    m = np.clip(m, prop.l1, prop.l2)
    assert np.all((m >= prop.l1) & (m <= prop.l2))
    return np.where(np.asarray(u_sign) < 0.5, m, -m)


def sample_multiplicative_epsilon(prop: EpsilonProposal, rng: np.random.Generator) -> float:
    """Draw by inverting the truncated-normal CDF, then attach a fair random sign."""
    if prop.kind is not EpsilonKind.RESTRICTED_UNIT_INTERVAL:
        raise ValueError("multiplicative moves need a RESTRICTED_UNIT_INTERVAL proposal")
    u_mag = rng.random()
    return float(multiplicative_epsilon_from_uniforms(prop, u_mag, rng.random()))


@dataclass(frozen=True)
class MoveType:
    """Per-coordinate move indicator.

    ``b`` has entries in {-1, +1} for additive moves and {-1, 0, +1} for
    multiplicative moves; ``probs = (p, q)`` with ``p = P(b_i = +1)`` and
    ``q = P(b_i = 0)``.
    """

    b: np.ndarray
    probs: tuple[float, float]
    alphabet: str

    @property
    def n_plus(self) -> int:
        return int(np.count_nonzero(self.b > 0))

    @property
    def n_zero(self) -> int:
        return int(np.count_nonzero(self.b == 0))


def check_move_probs(probs, alphabet: str) -> tuple[float, float]:
    p, q = float(probs[0]), float(probs[1])
    if alphabet == "additive":
        if q != 0.0:
            raise ValueError("additive move types have q = 0")
    elif alphabet != "multiplicative":
        raise ValueError(f"unknown alphabet {alphabet!r}")
    if not (0.0 < p < 1.0 and 0.0 <= q < 1.0 and p + q < 1.0):
        raise ValueError(f"invalid move probabilities p={p!r}, q={q!r}")
    return p, q


def move_type_from_uniforms(u, p: float, q: float) -> np.ndarray:
    """Map uniforms to move-type entries as floats; ``q = 0`` gives the additive alphabet."""
    u = np.asarray(u)
    if q == 0.0:
        return np.where(u < p, 1.0, -1.0)
    return np.where(u < p, 1.0, np.where(u < p + q, 0.0, -1.0))


def sample_move_type(dim: int, probs, alphabet: str, rng: np.random.Generator) -> MoveType:
    p, q = check_move_probs(probs, alphabet)
    return MoveType(move_type_from_uniforms(rng.random(dim), p, q), (p, q), alphabet)


def sample_rwmh_step(dim: int, scale: float, rng: np.random.Generator) -> np.ndarray:
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale!r}")
    return scale * rng.standard_normal(dim)
