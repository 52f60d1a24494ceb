"""Isotropic diffeomorphisms that lighten the tails of a target.

A map ``h(g) = f(|g|) g / |g|`` stretches space radially.  If ``beta`` has a
heavy-tailed density ``pi_beta``, then ``gamma = h^{-1}(beta)`` has density

    pi_gamma(g) = pi_beta(h(g)) |det grad h(g)|,

which for a suitable radial profile ``f`` is super-exponentially light, so
standard samplers mix well on it.  Samples are mapped back with ``h``.

Radial quantities are also exposed in log space (``log_f``, ``log_fprime``,
``log_f_over_r``) because the exponential profile overflows quickly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .targets import LogTarget, TailClass

_E = np.e
_TINY_R = 1e-12


class ProfileKind(str, enum.Enum):
    POLY_TAIL = "poly"
    EXP_TAIL = "exp"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class RadialProfile:
    """Radial profile ``f`` of an isotropic map.

    ``POLY_TAIL`` is ``f(r) = r`` below ``R`` and ``r + (r - R)**p`` above it
    (``R >= 0``, ``p > 2``).  ``EXP_TAIL`` is ``b^3 e r^3 / 6 + b e r / 2`` up to
    ``1/b`` and ``exp(b r) - e/3`` beyond (``b > 0``).  ``COMPOSITE`` applies
    the polynomial profile first and the exponential one to its result, which
    chains the two tail corrections.
    """

    kind: ProfileKind
    R: float = 1.0
    p: float = 3.0
    b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if self.kind is not ProfileKind.EXP_TAIL:
            if not self.R >= 0:
                raise ValueError(f"R must be nonnegative, got {self.R!r}")
            if not self.p > 2:
                raise ValueError(f"p must exceed 2, got {self.p!r}")
        if self.kind is not ProfileKind.POLY_TAIL and not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b!r}")

    @classmethod
    def poly(cls, R=1.0, p=3.0):
        return cls(ProfileKind.POLY_TAIL, R=R, p=p)

    @classmethod
    def exp(cls, b=1.0):
        return cls(ProfileKind.EXP_TAIL, b=b)

    @classmethod
    def composite(cls, R=1.0, p=3.0, b=1.0):
        return cls(ProfileKind.COMPOSITE, R=R, p=p, b=b)

    # -- polynomial pieces ---------------------------------------------------
    def _poly_f(self, r):
        t = np.maximum(r - self.R, 0.0)
        return r + t**self.p

    def _poly_log_fprime(self, r):
        t = np.maximum(r - self.R, 0.0)
        return np.log1p(self.p * t ** (self.p - 1))

    def _poly_log_f_over_r(self, r):
        t = np.maximum(r - self.R, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.log1p(np.where(t > 0, t**self.p / np.where(r > 0, r, 1.0), 0.0))
        return v

    # -- exponential pieces --------------------------------------------------
    def _exp_f(self, r):
        b = self.b
        with np.errstate(over="ignore"):
            return np.where(r > 1.0 / b, np.exp(b * r) - _E / 3.0, b**3 * _E * r**3 / 6.0 + b * _E * r / 2.0)

    def _exp_log_f(self, r):
        b = self.b
        hi = r > 1.0 / b
        rr = np.where(hi, r, 1.0 / b)
        up = b * rr + np.log1p(-(_E / 3.0) * np.exp(-b * rr))
        with np.errstate(divide="ignore"):
            lo = np.log(r) + self._exp_log_f_over_r_cubic(r)
        return np.where(hi, up, lo)

    def _exp_log_f_over_r_cubic(self, r):
        b = self.b
        return np.log(b**3 * _E * r**2 / 6.0 + b * _E / 2.0)

    def _exp_log_fprime(self, r):
        b = self.b
        return np.where(r > 1.0 / b, np.log(b) + b * r, np.log(b**3 * _E * r**2 / 2.0 + b * _E / 2.0))

    def _exp_log_f_over_r(self, r):
        with np.errstate(divide="ignore", invalid="ignore"):
            up = self._exp_log_f(r) - np.log(np.where(r > 0, r, 1.0))
        return np.where(r > 1.0 / self.b, up, self._exp_log_f_over_r_cubic(r))

    # -- public radial functions ---------------------------------------------
    def f(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind is ProfileKind.POLY_TAIL:
            return self._poly_f(r)
        if self.kind is ProfileKind.EXP_TAIL:
            return self._exp_f(r)
        return self._exp_f(self._poly_f(r))

    def log_f(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind is ProfileKind.POLY_TAIL:
            with np.errstate(divide="ignore"):
                return np.log(r) + self._poly_log_f_over_r(r)
        if self.kind is ProfileKind.EXP_TAIL:
            return self._exp_log_f(r)
        return self._exp_log_f(self._poly_f(r))

    def log_fprime(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind is ProfileKind.POLY_TAIL:
            return self._poly_log_fprime(r)
        if self.kind is ProfileKind.EXP_TAIL:
            return self._exp_log_fprime(r)
        return self._exp_log_fprime(self._poly_f(r)) + self._poly_log_fprime(r)

    def log_f_over_r(self, r):
        """``log(f(r) / r)``, finite at ``r = 0`` where it takes its limit."""
        r = np.asarray(r, dtype=float)
        if self.kind is ProfileKind.POLY_TAIL:
            return self._poly_log_f_over_r(r)
        if self.kind is ProfileKind.EXP_TAIL:
            return self._exp_log_f_over_r(r)
        s = self._poly_f(r)
        return self._exp_log_f_over_r(s) + self._poly_log_f_over_r(r)

    def fprime(self, r):
        return np.exp(self.log_fprime(r))


def radial_f(profile: RadialProfile, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    out = profile.f(r)
    return float(out) if out.ndim == 0 else out


def _inverse_scalar(profile: RadialProfile, s: float) -> float:
    if s == 0.0:
        return 0.0
    if s == np.inf:
        return np.inf
    if profile.kind is ProfileKind.POLY_TAIL and s < profile.R:
        return s
    g = lambda r: float(profile.f(r)) - s
    hi = max(1.0, s)
    # f(r) >= r, so the root lies in [0, s]; for the exponential profiles
    # a much tighter bracket is available from the log
    if profile.kind is not ProfileKind.POLY_TAIL:
        hi = min(hi, max(1.0, np.log(s + _E) / profile.b + 1.0))
    while g(hi) < 0:
        hi *= 2.0
    r = brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    fp = float(profile.fprime(r))
    if np.isfinite(fp) and fp > 0:
        polished = r - g(r) / fp
        if polished >= 0 and abs(g(polished)) <= abs(g(r)):
            r = polished
    return r


def radial_f_inverse(profile: RadialProfile, s):
    """Solve ``f(r) = s`` for ``r >= 0``; vectorized over ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    out = np.vectorize(lambda v: _inverse_scalar(profile, float(v)), otypes=[float])(s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IsotropicMap:
    profile: RadialProfile
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")

    def _split(self, g):
        g = np.atleast_2d(np.asarray(g, dtype=float))
        if g.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: map has dim {self.dim}, got {g.shape[1]}")
        r = np.linalg.norm(g, axis=1)
        return g, r

    def forward(self, g):
        """``h(g)``; accepts one point or a batch."""
        single = np.ndim(g) == 1
        g, r = self._split(g)
        with np.errstate(over="ignore"):
            scale = np.exp(self.profile.log_f_over_r(r))
        out = g * scale[:, None]
        return out[0] if single else out

    def inverse(self, beta):
        single = np.ndim(beta) == 1
        beta, s = self._split(beta)
        r = radial_f_inverse(self.profile, s)
        r = np.atleast_1d(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(s > 0, r / np.where(s > 0, s, 1.0), 0.0)
        out = beta * ratio[:, None]
        return out[0] if single else out

    def log_abs_det_jacobian(self, g):
        single = np.ndim(g) == 1
        _, r = self._split(g)
        out = _log_det_from_radius(self.profile, r, self.dim)
        return float(out[0]) if single else out


def _log_det_from_radius(profile: RadialProfile, r, dim: int):
    r = np.asarray(r, dtype=float)
    val = profile.log_fprime(r) + (dim - 1) * profile.log_f_over_r(r)
    # removable singularity at the origin: the polynomial profile has slope 1
    # there, the cubic branch of the exponential one has slope b e / 2
    if profile.kind is ProfileKind.POLY_TAIL:
        zero_val = 0.0
    else:
        zero_val = dim * np.log(profile.b * _E / 2.0)
    return np.where(r < _TINY_R, zero_val, val)


def log_abs_det_jacobian(hmap: IsotropicMap, g):
    """``log f'(r) + (d - 1) log(f(r) / r)`` at ``r = |g|``."""
    return hmap.log_abs_det_jacobian(g)


def pushforward_samples(hmap: IsotropicMap, gamma_samples):
    return hmap.forward(gamma_samples)


class TransformedTarget(LogTarget):
    """Density of ``gamma = h^{-1}(beta)`` when ``beta ~ base``.

    When the base exposes ``log_density_on_ray`` the base is evaluated from
    ``log f(r)`` directly, so points whose image overflows still get a finite
    log-density.  Reported samples are mapped back with :attr:`to_original`
    and the marginal CDFs are those of the base.
    """

    tail_class = TailClass.SUPER_EXPONENTIAL

    def __init__(self, base: LogTarget, hmap: Optional[IsotropicMap] = None, profile: Optional[RadialProfile] = None):
        super().__init__(base.dim)
        if hmap is None:
            if profile is None:
                raise ValueError("need either a map or a radial profile")
            hmap = IsotropicMap(profile, base.dim)
        if hmap.dim != base.dim:
            raise ValueError("map and base dimensions differ")
        self.base = base
        self.map = hmap
        self._on_ray = getattr(base, "log_density_on_ray", None)

    def _log_density(self, g):
        prof = self.map.profile
        r = np.linalg.norm(g, axis=1)
        logdet = _log_det_from_radius(prof, r, self.dim)
        out = np.empty(g.shape[0])
        zero = r < _TINY_R
        if np.any(zero):
            out[zero] = self.base.log_density(np.zeros((int(zero.sum()), self.dim)))
        nz = ~zero
        if np.any(nz):
            u = g[nz] / r[nz, None]
            if self._on_ray is not None:
                out[nz] = self._on_ray(u, prof.log_f(r[nz]))
            else:
                out[nz] = self.base.log_density(self.map.forward(g[nz]))
        return out + logdet

    def to_original(self, g):
        return self.map.forward(g)

    def marginal_cdf(self, j):
        return self.base.marginal_cdf(j)

    def marginal_cdf_all(self, x):
        return self.base.marginal_cdf_all(x)


def transformed_log_density(t: TransformedTarget, g):
    return t.log_density(g)
