"""Mixture model families: densities, responsibilities, parameter containers.

Three families are supported, all univariate with unit-variance Gaussian
components where applicable:

* ``gmm``    -- K Gaussian components N(theta_k, 1) with weights pi_k;
* ``expfam`` -- K components from a user-supplied one-parameter exponential
  family ``p(y | k) = exp(theta_k * t(y) + h(y) - alpha(theta_k))``;
* ``sym2``   -- two equally weighted Gaussians at -theta and +theta, tied
  through a single scalar.

Responsibilities are the posterior component probabilities under the current
parameters (mixture weights included) and are always computed in log space
with a max shift; a positive logit difference is never exponentiated.

Everything here is a pure function of immutable values and safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit, gammaln, logsumexp, ndtri

from .errors import DomainError, MeanOutOfRange, NoConvergence

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Support:
    """Observation support: ``kind`` is ``"real"`` or ``"integer"``."""

    kind: str
    lo: float = -np.inf
    hi: float = np.inf

    def __post_init__(self):
        if self.kind not in ("real", "integer"):
            raise ValueError(f"unknown support kind {self.kind!r}")


@dataclass(frozen=True)
class ExpFamilySpec:
    """A one-parameter exponential family in natural form.

    ``p(y; theta) = exp(theta * t(y) + log_carrier(y) - alpha(theta))`` on
    ``support``.  ``alpha_prime`` is the mean function (strictly increasing
    on ``natural_domain``) and ``alpha_second`` its derivative, the Fisher
    information, both supplied analytically.  All callables must accept and
    return ndarrays.

    ``quantile(theta, u)``, when given, maps uniforms in (0, 1) to component
    draws by inverse CDF; it is required only for sampling datasets.
    """

    name: str
    t: Callable
    log_carrier: Callable
    alpha: Callable
    alpha_prime: Callable
    alpha_second: Callable
    natural_domain: tuple[float, float] = (-np.inf, np.inf)
    support: Support = Support("real")
    quantile: Callable | None = None

    def check_theta(self, theta: np.ndarray) -> None:
        lo, hi = self.natural_domain
        theta = np.asarray(theta)
        if np.any(theta <= lo) or np.any(theta >= hi):
            raise DomainError(
                f"theta {theta} outside open natural domain ({lo}, {hi}) "
                f"of family {self.name!r}")


def gaussian_spec() -> ExpFamilySpec:
    """Unit-variance Gaussian: t(y)=y, alpha(theta)=theta^2/2."""
    return ExpFamilySpec(
        name="gaussian",
        t=lambda y: y,
        log_carrier=lambda y: -0.5 * y * y - LOG_SQRT_2PI,
        alpha=lambda th: 0.5 * th * th,
        alpha_prime=lambda th: th,
        alpha_second=lambda th: np.ones_like(np.asarray(th, dtype=float)),
        natural_domain=(-np.inf, np.inf),
        support=Support("real"),
        quantile=lambda th, u: th + ndtri(u),
    )


def poisson_spec() -> ExpFamilySpec:
    """Poisson with natural parameter log-mean: alpha(theta)=exp(theta)."""

    def _quantile(th, u):
        from scipy.stats import poisson

        return poisson.ppf(u, np.exp(th)).astype(float)

    return ExpFamilySpec(
        name="poisson",
        t=lambda y: y,
        log_carrier=lambda y: -gammaln(np.asarray(y, dtype=float) + 1.0),
        alpha=np.exp,
        alpha_prime=np.exp,
        alpha_second=np.exp,
        natural_domain=(-np.inf, np.inf),
        support=Support("integer", 0, np.inf),
        quantile=_quantile,
    )


def exponential_spec() -> ExpFamilySpec:
    """Exponential distribution with rate -theta, theta < 0."""
    return ExpFamilySpec(
        name="exponential",
        t=lambda y: y,
        log_carrier=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
        alpha=lambda th: -np.log(-th),
        alpha_prime=lambda th: -1.0 / th,
        alpha_second=lambda th: 1.0 / (th * th),
        natural_domain=(-np.inf, 0.0),
        support=Support("real", 0.0, np.inf),
        quantile=lambda th, u: np.log1p(-u) / th,
    )


BUILTIN_FAMILIES = {
    "gaussian": gaussian_spec,
    "poisson": poisson_spec,
    "exponential": exponential_spec,
}


class MixtureParams:
    """Weights ``pi`` and component parameters ``theta`` of a K-mixture.

    Immutable; ``pi`` must be strictly positive and sum to 1 within 1e-12.
    """

    __slots__ = ("pi", "theta")

    def __init__(self, pi, theta):
        pi = np.asarray(pi, dtype=float).copy()
        theta = np.asarray(theta, dtype=float).copy()
        if pi.ndim != 1 or theta.ndim != 1 or pi.shape != theta.shape:
            raise DomainError("pi and theta must be 1-d vectors of equal length")
        if pi.size < 1:
            raise DomainError("mixture needs at least one component")
        if np.any(pi <= 0.0):
            raise DomainError(f"all mixture weights must be positive, got {pi}")
        if abs(pi.sum() - 1.0) > 1e-12:
            raise DomainError(f"mixture weights must sum to 1, got sum={pi.sum()!r}")
        if not np.all(np.isfinite(theta)):
            raise DomainError(f"component parameters must be finite, got {theta}")
        pi.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "theta", theta)

    def __setattr__(self, name, value):
        raise AttributeError("MixtureParams is immutable")

    @property
    def K(self) -> int:
        return self.theta.size

    @classmethod
    def symmetric(cls, theta: float) -> "MixtureParams":
        """Tied two-component parameters (-theta, +theta) with equal weights."""
        theta = float(theta)
        return cls([0.5, 0.5], [-theta, theta])

    def sym2_scalar(self) -> float:
        """Scalar behind a symmetric pair; raises if the tie does not hold."""
        if self.K != 2 or self.theta[0] != -self.theta[1] or self.pi[0] != 0.5:
            raise DomainError(f"not a tied symmetric pair: {self}")
        return float(self.theta[1])

    def __eq__(self, other):
        return (isinstance(other, MixtureParams)
                and np.array_equal(self.pi, other.pi)
                and np.array_equal(self.theta, other.theta))

    def __repr__(self):
        return f"MixtureParams(pi={self.pi.tolist()}, theta={self.theta.tolist()})"


@dataclass(frozen=True)
class ModelKind:
    """Dispatch tag over the three supported families."""

    tag: str
    spec: ExpFamilySpec | None = None

    def __post_init__(self):
        if self.tag not in ("gmm", "sym2", "expfam"):
            raise DomainError(f"unknown model kind {self.tag!r}")
        if self.tag == "expfam" and self.spec is None:
            raise DomainError("expfam kind requires an ExpFamilySpec")
        if self.tag != "expfam" and self.spec is not None:
            raise DomainError(f"{self.tag} kind takes no family spec")

    @classmethod
    def gmm(cls) -> "ModelKind":
        return cls("gmm")

    @classmethod
    def sym2(cls) -> "ModelKind":
        return cls("sym2")

    @classmethod
    def expfam(cls, spec: ExpFamilySpec) -> "ModelKind":
        return cls("expfam", spec)

    def check_params(self, params: MixtureParams) -> None:
        if self.tag == "sym2":
            params.sym2_scalar()
        if self.tag == "expfam":
            self.spec.check_theta(params.theta)


def _component_log_density_matrix(kind: ModelKind, params: MixtureParams,
                                  y: np.ndarray) -> np.ndarray:
    """(N, K) matrix of log p(y_i | k); y must already be 1-d float."""
    theta = params.theta
    if kind.tag == "expfam":
        spec = kind.spec
        ty = np.asarray(spec.t(y), dtype=float)
        hy = np.asarray(spec.log_carrier(y), dtype=float)
        return (np.outer(ty, theta) + hy[:, None]
                - np.asarray(spec.alpha(theta), dtype=float)[None, :])
    diff = y[:, None] - theta[None, :]
    return -0.5 * diff * diff - LOG_SQRT_2PI


def component_log_density(kind: ModelKind, k: int, params: MixtureParams, y):
    """log p(y | component k; theta).  Vectorized over ``y``."""
    kind.check_params(params)
    if not 0 <= k < params.K:
        raise DomainError(f"component index {k} out of range for K={params.K}")
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = _component_log_density_matrix(kind, params, y_arr)[:, k]
    return float(out[0]) if np.isscalar(y) or np.ndim(y) == 0 else out


def marginal_log_density(kind: ModelKind, params: MixtureParams, y):
    """log of the pi-weighted component density sum, via max-shifted
    log-sum-exp so nothing overflows for |theta|, |y| up to 50."""
    kind.check_params(params)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    logw = np.log(params.pi)[None, :] + _component_log_density_matrix(kind, params, y_arr)
    out = logsumexp(logw, axis=1)
    return float(out[0]) if np.isscalar(y) or np.ndim(y) == 0 else out


def log_responsibilities(kind: ModelKind, params: MixtureParams,
                         y: np.ndarray) -> np.ndarray:
    """(N, K) matrix of log posterior component probabilities."""
    kind.check_params(params)
    y = np.asarray(y, dtype=float)
    logw = np.log(params.pi)[None, :] + _component_log_density_matrix(kind, params, y)
    return logw - logsumexp(logw, axis=1, keepdims=True)


def responsibilities(kind: ModelKind, params: MixtureParams,
                     y: np.ndarray) -> np.ndarray:
    """(N, K) posterior probabilities; rows sum to 1."""
    if kind.tag == "sym2":
        # Equal weights cancel and the two-component posterior collapses to a
        # logistic in 2*y*theta; this form never exponentiates a positive logit.
        scalar = params.sym2_scalar()
        q0 = expit(-2.0 * np.asarray(y, dtype=float) * scalar)
        return np.stack([q0, 1.0 - q0], axis=-1)
    return np.exp(log_responsibilities(kind, params, y))


def responsibility(kind: ModelKind, params: MixtureParams, y, k: int):
    """Posterior probability of component ``k`` given ``y``.

    For ``sym2``, ``k=0`` is the component at ``-theta`` and the value is
    computed as the stable logistic ``1 / (1 + exp(2*y*theta))``.
    """
    kind.check_params(params)
    if not 0 <= k < params.K:
        raise DomainError(f"component index {k} out of range for K={params.K}")
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = responsibilities(kind, params, y_arr)[:, k]
    return float(out[0]) if np.isscalar(y) or np.ndim(y) == 0 else out


def invert_alpha_prime(spec: ExpFamilySpec, target: float,
                       x0: float | None = None,
                       tol: float = 1e-12, max_iter: int = 200) -> float:
    """Solve ``alpha_prime(x) = target`` for x in the natural domain.

    Safeguarded Newton: a bracket is grown geometrically from ``x0`` using
    the monotonicity of ``alpha_prime``; Newton steps that leave the bracket
    fall back to bisection.  Raises :class:`MeanOutOfRange` when no bracket
    exists inside the domain and :class:`NoConvergence` after ``max_iter``
    iterations.
    """
    lo_dom, hi_dom = spec.natural_domain
    if not np.isfinite(target):
        raise MeanOutOfRange(f"target statistic {target} is not finite")

    def residual(x):
        return float(spec.alpha_prime(x)) - target

    if x0 is None or not (lo_dom < x0 < hi_dom) or not np.isfinite(x0):
        if np.isfinite(lo_dom) and np.isfinite(hi_dom):
            x0 = 0.5 * (lo_dom + hi_dom)
        elif np.isfinite(lo_dom):
            x0 = lo_dom + 1.0
        elif np.isfinite(hi_dom):
            x0 = hi_dom - 1.0
        else:
            x0 = 0.0

    # Grow a bracket [lo, hi] with residual(lo) <= 0 <= residual(hi).
    lo = hi = float(x0)
    r0 = residual(x0)
    step = max(1.0, abs(x0))
    for _ in range(200):
        if residual(lo) <= 0.0:
            break
        lo = 0.5 * (lo + lo_dom) if np.isfinite(lo_dom) else lo - step
        step *= 2.0
    else:
        raise MeanOutOfRange(
            f"statistic {target} below the range of alpha_prime for {spec.name!r}")
    step = max(1.0, abs(x0))
    for _ in range(200):
        if residual(hi) >= 0.0:
            break
        hi = 0.5 * (hi + hi_dom) if np.isfinite(hi_dom) else hi + step
        step *= 2.0
    else:
        raise MeanOutOfRange(
            f"statistic {target} above the range of alpha_prime for {spec.name!r}")

    x = float(np.clip(x0, lo, hi))
    r = r0 if x == x0 else residual(x)
    for _ in range(max_iter):
        if abs(r) < tol:
            return x
        if r > 0.0:
            hi = x
        else:
            lo = x
        deriv = float(spec.alpha_second(x))
        x_new = x - r / deriv if deriv > 0.0 else np.nan
        if not np.isfinite(x_new) or not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        x = x_new
        r = residual(x)
    raise NoConvergence(
        f"alpha_prime inversion did not reach |residual| < {tol} "
        f"in {max_iter} iterations (last residual {r:.3e})")
