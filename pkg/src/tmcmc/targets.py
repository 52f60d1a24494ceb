"""Target log-densities used by the samplers and experiments.

All densities are evaluated in log space.  ``log_density`` accepts either a
single point of shape ``(d,)`` (returning a float) or a batch of shape
``(n, d)`` (returning an array of length ``n``).
"""
from __future__ import annotations

import enum
from typing import Callable, Optional

import numpy as np
from scipy import special, stats

LOG_2PI = np.log(2.0 * np.pi)


class TailClass(enum.Enum):
    SUPER_EXPONENTIAL = "super-exponential"
    EXPONENTIAL = "exponential"
    SUB_EXPONENTIAL = "sub-exponential"
    UNKNOWN = "unknown"


class LogTarget:
    """Base class for an evaluatable log-density on R^d.

    Subclasses implement ``_log_density`` on a 2-D batch.  ``gradient`` is
    optional; when a subclass leaves it as ``None`` numerical differences are
    used wherever a gradient is required.
    """

    tail_class = TailClass.UNKNOWN

    def __init__(self, dim: int):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim!r}")
        self.dim = int(dim)

    # subclasses override
    def _log_density(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xb = np.atleast_2d(x)
        if xb.ndim != 2 or xb.shape[1] != self.dim:
            raise ValueError(
                f"dimension mismatch: target has dim {self.dim}, got shape {x.shape}"
            )
        out = self._log_density(xb)
        out = np.where(np.isnan(out), -np.inf, out)
        return float(out[0]) if single else out

    def to_original(self, x: np.ndarray) -> np.ndarray:
        """Map sampler-space points to the parameterization being reported."""
        return x

    def marginal_cdf(self, j: int) -> Callable[[np.ndarray], np.ndarray]:
        raise NotImplementedError(f"{type(self).__name__} has no marginal CDF")

    def marginal_cdf_all(self, x: np.ndarray) -> np.ndarray:
        """Column ``j`` of ``x`` passed through the marginal CDF of coordinate ``j``."""
        x = np.atleast_2d(x)
        return np.column_stack([self.marginal_cdf(j)(x[:, j]) for j in range(self.dim)])

    def __call__(self, x):
        return self.log_density(x)


def log_density(t: LogTarget, x) -> float:
    """Evaluate ``t`` at ``x``; raises ``ValueError`` on dimension mismatch."""
    return t.log_density(x)


def _spd_factor(cov: np.ndarray) -> tuple[np.ndarray, float]:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance must be positive definite") from exc
    return chol, 2.0 * float(np.sum(np.log(np.diag(chol))))


class _Elliptical(LogTarget):
    """Shared location/scale plumbing for the Gaussian and Student-t targets."""

    def __init__(self, mean, cov):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        super().__init__(mean.shape[0])
        cov = np.eye(self.dim) if cov is None else np.asarray(cov, dtype=float)
        if cov.shape != (self.dim, self.dim):
            raise ValueError(f"covariance shape {cov.shape} does not match dim {self.dim}")
        self.mean = mean
        self.cov = cov
        self.chol, self.log_det = _spd_factor(cov)
        self.precision = np.linalg.inv(cov)
        self._identity = np.array_equal(cov, np.eye(self.dim))
        self._centered = not np.any(mean)

    def _mahalanobis(self, x: np.ndarray) -> np.ndarray:
        z = x - self.mean
        if self._identity:
            return np.einsum("ij,ij->i", z, z)
        return np.einsum("ij,jk,ik->i", z, self.precision, z)

    def _log_mahalanobis_on_ray(self, direction: np.ndarray, log_radius: np.ndarray) -> np.ndarray:
        """log of the Mahalanobis form at ``exp(log_radius) * direction``.

        Stays finite for radii far beyond the float range.
        """
        u = np.atleast_2d(direction)
        a = np.einsum("ij,jk,ik->i", u, self.precision, u)
        if self._centered:
            return 2.0 * log_radius + np.log(a)
        m = float(self.mean @ self.precision @ self.mean)
        c = u @ (self.precision @ self.mean)
        inv_s = np.exp(-log_radius)
        inner = a - 2.0 * c * inv_s + m * inv_s**2
        return 2.0 * log_radius + np.log(np.maximum(inner, 1e-300))


class GaussianTarget(_Elliptical):
    """Multivariate normal N(mean, cov)."""

    tail_class = TailClass.SUPER_EXPONENTIAL

    def __init__(self, mean, cov=None):
        super().__init__(mean, cov)
        self._const = -0.5 * (self.dim * LOG_2PI + self.log_det)

    @classmethod
    def standard(cls, dim: int) -> "GaussianTarget":
        return cls(np.zeros(dim))

    def _log_density(self, x):
        return self._const - 0.5 * self._mahalanobis(x)

    def log_density_on_ray(self, direction, log_radius):
        lq = self._log_mahalanobis_on_ray(direction, np.asarray(log_radius, dtype=float))
        with np.errstate(over="ignore"):
            return self._const - 0.5 * np.exp(lq)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return -(x - self.mean) @ self.precision.T

    def marginal_cdf(self, j):
        loc, sd = self.mean[j], np.sqrt(self.cov[j, j])
        return lambda v: special.ndtr((np.asarray(v) - loc) / sd)

    def marginal_cdf_all(self, x):
        return special.ndtr((np.atleast_2d(x) - self.mean) / np.sqrt(np.diag(self.cov)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self.chol.T


class StudentTTarget(_Elliptical):
    """Multivariate t with ``dof`` degrees of freedom, location and scale matrix.

    ``dof = 1`` is the multivariate Cauchy.  The normalizing constant uses
    ``det(scale) ** 0.5``.
    """

    tail_class = TailClass.SUB_EXPONENTIAL

    def __init__(self, dof: float, mean, scale=None):
        if not dof > 0:
            raise ValueError(f"dof must be positive, got {dof!r}")
        super().__init__(mean, scale)
        self.dof = float(dof)
        d, nu = self.dim, self.dof
        self._const = (
            special.gammaln(0.5 * (nu + d))
            - special.gammaln(0.5 * nu)
            - 0.5 * d * np.log(nu * np.pi)
            - 0.5 * self.log_det
        )

    @property
    def scale(self) -> np.ndarray:
        return self.cov

    def _log_density(self, x):
        q = self._mahalanobis(x)
        return self._const - 0.5 * (self.dof + self.dim) * np.log1p(q / self.dof)

    def log_density_on_ray(self, direction, log_radius):
        lq = self._log_mahalanobis_on_ray(direction, np.asarray(log_radius, dtype=float))
        return self._const - 0.5 * (self.dof + self.dim) * np.logaddexp(0.0, lq - np.log(self.dof))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        z = np.atleast_2d(x) - self.mean
        pz = z @ self.precision.T
        q = np.einsum("ij,ij->i", z, pz)
        g = -((self.dof + self.dim) / (self.dof + q))[:, None] * pz
        return g[0] if single else g

    def marginal_cdf(self, j):
        loc, sd = self.mean[j], np.sqrt(self.cov[j, j])
        dist = stats.t(df=self.dof, loc=loc, scale=sd)
        return dist.cdf

    def marginal_cdf_all(self, x):
        return special.stdtr(self.dof, (np.atleast_2d(x) - self.mean) / np.sqrt(np.diag(self.cov)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self.dim)) @ self.chol.T
        w = rng.chisquare(self.dof, size=n) / self.dof
        return self.mean + z / np.sqrt(w)[:, None]


class MixtureFormTarget:
    """Target written as a continuous mixture  pi(x) = int f1(x|theta) f2(theta) dtheta.

    Parameters
    ----------
    conditional : callable
        ``theta -> LogTarget``; every member must be super-exponential.
    mixing_sampler : callable
        ``rng -> theta``, an exact draw from the mixing density.
    marginal : LogTarget, optional
        Closed-form marginal, when one is known.
    """

    def __init__(self, conditional, mixing_sampler, marginal: Optional[LogTarget] = None):
        self._conditional = conditional
        self.mixing_sampler = mixing_sampler
        self.marginal = marginal

    def conditional(self, theta) -> LogTarget:
        t = self._conditional(theta)
        if t.tail_class is not TailClass.SUPER_EXPONENTIAL:
            raise ValueError(f"conditional at theta={theta!r} is not super-exponential")
        return t

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        rows = []
        for _ in range(n):
            rows.append(self.conditional(self.mixing_sampler(rng)).sample(rng, 1)[0])
        return np.array(rows)

    @classmethod
    def student_t(cls, dof: float, mean, scale=None) -> "MixtureFormTarget":
        """Multivariate t as a Gamma scale mixture of Gaussians."""
        marginal = StudentTTarget(dof, mean, scale)

        def conditional(w):
            return GaussianTarget(marginal.mean, marginal.cov / w)

        def mixing(rng):
            return rng.gamma(0.5 * dof, 2.0 / dof)

        return cls(conditional, mixing, marginal)


def compound_symmetric(dim: int, diag: float = 0.7, offdiag: float = 0.3) -> np.ndarray:
    """``diag * I + offdiag * 1 1'``, the dependent scale matrix of the heavy-tail experiments."""
    return diag * np.eye(dim) + offdiag * np.ones((dim, dim))


def _numerical_gradient(t: LogTarget, x: np.ndarray, step: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (t.log_density(x + e) - t.log_density(x - e)) / (2.0 * step)
    return g


def super_exponential_probe(t: LogTarget, direction, radii) -> np.ndarray:
    """Radial derivative ``n(x)' grad log pi(x)`` at ``x = r * direction`` for each radius.

    A super-exponential target shows values decreasing without bound; a
    sub-exponential one shows values tending to zero from below.
    """
    direction = np.asarray(direction, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if direction.shape != (t.dim,):
        raise ValueError(f"direction must have shape ({t.dim},)")
    if abs(np.linalg.norm(direction) - 1.0) > 1e-10:
        raise ValueError("direction must have unit Euclidean norm")
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    out = np.empty(radii.size)
    for k, r in enumerate(radii):
        x = r * direction
        if not np.isfinite(t.log_density(x)):
            raise ValueError(f"log density is -inf at probe point r={r} (x={x.tolist()})")
        if t.gradient is not None:
            g = np.asarray(t.gradient(x), dtype=float).reshape(-1)
        else:
            g = _numerical_gradient(t, x, 1e-5 * max(1.0, r))
        out[k] = float(direction @ g)
    return out


class BoxRestrictedTarget(LogTarget):
    """``base`` restricted to the box [-a, a]^d (``inside=True``) or to its complement.

    ``mass`` is the base probability of the box; when given, the restricted
    density is renormalized so it integrates to one.
    """

    def __init__(self, base: LogTarget, halfwidth: float, inside: bool, mass: Optional[float] = None):
        if not halfwidth > 0:
            raise ValueError(f"halfwidth must be positive, got {halfwidth!r}")
        super().__init__(base.dim)
        self.base = base
        self.halfwidth = float(halfwidth)
        self.inside = bool(inside)
        self.tail_class = base.tail_class if not inside else TailClass.SUPER_EXPONENTIAL
        if mass is None:
            self._shift = 0.0
        else:
            if not 0.0 < mass < 1.0:
                raise ValueError(f"box mass must lie in (0, 1), got {mass!r}")
            self._shift = -np.log(mass if inside else 1.0 - mass)

    def contains(self, x) -> np.ndarray:
        m = np.max(np.abs(np.atleast_2d(x)), axis=1)
        return m <= self.halfwidth if self.inside else m >= self.halfwidth

    def _log_density(self, x):
        keep = self.contains(x)
        out = np.full(x.shape[0], -np.inf)
        if np.any(keep):
            out[keep] = self.base.log_density(x[keep]) + self._shift
        return out
