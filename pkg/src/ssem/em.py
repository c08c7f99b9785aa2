"""Finite-sample semi-supervised EM: surrogate objective and M-step operators.

The surrogate is normalized by 1/(n+m).  Labeled samples enter as indicator
terms; unlabeled samples are weighted by responsibilities under the previous
iterate.  Only the component parameters are updated: the mixture weights are
treated as known and never re-estimated.

Per-sample reductions use NumPy's pairwise summation over arrays held in a
fixed order, so results are bitwise reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import EmptyComponent
from .model import (
    LOG_SQRT_2PI,
    ExpFamilySpec,
    MixtureParams,
    ModelKind,
    invert_alpha_prime,
    responsibilities,
)

_EMPTY_DENOMINATOR = 1e-300  # subnormal boundary: below this a component is empty


@dataclass(frozen=True)
class EmConfig:
    """Stopping rule: quit when max_k |theta_k' - theta_k| < tol.

    ``record_trajectory=False`` skips the per-step surrogate evaluation
    (iterates and errors are always kept).
    """

    max_iters: int = 100
    tol: float = 1e-10
    record_trajectory: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")


@dataclass
class Trajectory:
    """EM iterates plus per-step surrogate values and errors.

    ``iterates[0]`` is the supplied initialization.  ``q_values[t]`` is the
    surrogate at step t+1 evaluated against iterate t (empty when not
    recorded); ``errors[t]`` is max_k |theta_t,k - theta*_k| (empty when no
    ground truth was supplied).
    """

    iterates: list[MixtureParams] = field(default_factory=list)
    q_values: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.iterates) - 1

    @property
    def final(self) -> MixtureParams:
        return self.iterates[-1]

    def write_csv(self, path) -> None:
        """Rows ``iter,theta_1..theta_K,q_value,err``; q_value is empty on
        row 0 and whenever the surrogate was not recorded, err is empty when
        no ground truth was supplied.  17 significant digits, LF endings."""
        K = self.iterates[0].K
        header = ["iter"] + [f"theta_{k + 1}" for k in range(K)] + ["q_value", "err"]
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for t, params in enumerate(self.iterates):
                row = [str(t)] + [f"{v:.17g}" for v in params.theta]
                row.append(f"{self.q_values[t - 1]:.17g}"
                           if t > 0 and t - 1 < len(self.q_values) else "")
                row.append(f"{self.errors[t]:.17g}" if t < len(self.errors) else "")
                fh.write(",".join(row) + "\n")


def _max_error(params: MixtureParams, theta_star: MixtureParams) -> float:
    return float(np.max(np.abs(params.theta - theta_star.theta)))


def q_value(kind: ModelKind, data, theta: MixtureParams,
            theta_t: MixtureParams) -> float:
    """Semi-supervised surrogate Q(theta; theta_t), normalized by 1/(n+m).

    Gaussian kinds use the quadratic complete-data form including the
    log(sqrt(2*pi)/pi_k) constants; exponential-family kinds use
    ``theta_k t(y) + h(y) - alpha(theta_k)`` without weight constants.
    The two therefore differ by a theta-independent offset.
    """
    kind.check_params(theta)
    kind.check_params(theta_t)
    total = data.m + data.n
    x, ly, uy = data.labeled_x, data.labeled_y, data.unlabeled_y
    q = responsibilities(kind, theta_t, uy) if data.n else None

    if kind.tag == "expfam":
        spec = kind.spec
        th, alph = theta.theta, np.asarray(kind.spec.alpha(theta.theta), dtype=float)
        acc = 0.0
        if data.m:
            ty, hy = np.asarray(spec.t(ly), dtype=float), np.asarray(
                spec.log_carrier(ly), dtype=float)
            acc += float(np.sum(th[x] * ty + hy - alph[x]))
        if data.n:
            ty, hy = np.asarray(spec.t(uy), dtype=float), np.asarray(
                spec.log_carrier(uy), dtype=float)
            terms = ty[:, None] * th[None, :] + hy[:, None] - alph[None, :]
            acc += float(np.sum(q * terms))
        return acc / total

    th = theta.theta
    consts = LOG_SQRT_2PI - np.log(theta.pi)
    acc = 0.0
    if data.m:
        acc += float(np.sum(0.5 * (ly - th[x]) ** 2 + consts[x]))
    if data.n:
        diff = uy[:, None] - th[None, :]
        acc += float(np.sum(q * (0.5 * diff * diff + consts[None, :])))
    return -acc / total


def m_step_gmm(data, theta_t: MixtureParams) -> MixtureParams:
    """Per-component weighted means: labels count as hard assignments,
    unlabeled points contribute their responsibilities under ``theta_t``.
    Weights are left unchanged."""
    K = theta_t.K
    num = np.zeros(K)
    den = np.zeros(K)
    if data.m:
        num += np.bincount(data.labeled_x, weights=data.labeled_y, minlength=K)
        den += np.bincount(data.labeled_x, minlength=K).astype(float)
    if data.n:
        q = responsibilities(ModelKind.gmm(), theta_t, data.unlabeled_y)
        num += q.T @ data.unlabeled_y
        den += q.sum(axis=0)
    if np.any(den < _EMPTY_DENOMINATOR):
        k = int(np.argmin(den))
        raise EmptyComponent(
            f"component {k} has no labeled support and responsibility mass "
            f"{den[k]:.3e}")
    return MixtureParams(theta_t.pi, num / den)


def m_step_expfam(spec: ExpFamilySpec, data, theta_t: MixtureParams) -> MixtureParams:
    """Weighted mean of sufficient statistics mapped back through the
    inverse mean function (safeguarded Newton to |residual| < 1e-12)."""
    kind = ModelKind.expfam(spec)
    kind.check_params(theta_t)
    K = theta_t.K
    num = np.zeros(K)
    den = np.zeros(K)
    if data.m:
        t_lab = np.asarray(spec.t(data.labeled_y), dtype=float)
        num += np.bincount(data.labeled_x, weights=t_lab, minlength=K)
        den += np.bincount(data.labeled_x, minlength=K).astype(float)
    if data.n:
        q = responsibilities(kind, theta_t, data.unlabeled_y)
        t_unl = np.asarray(spec.t(data.unlabeled_y), dtype=float)
        num += q.T @ t_unl
        den += q.sum(axis=0)
    if np.any(den < _EMPTY_DENOMINATOR):
        k = int(np.argmin(den))
        raise EmptyComponent(
            f"component {k} has no labeled support and responsibility mass "
            f"{den[k]:.3e}")
    theta_new = np.array([
        invert_alpha_prime(spec, num[k] / den[k], x0=float(theta_t.theta[k]))
        for k in range(K)
    ])
    return MixtureParams(theta_t.pi, theta_new)


def m_step_sym2(data, theta_t: float) -> float:
    """Tied-mean update for the symmetric pair.

    Labels for the component at -theta flip the sign of their observation;
    unlabeled points are tilted by 1 - 2*q where q is the posterior of the
    -theta component.
    """
    total = data.m + data.n
    acc = 0.0
    if data.m:
        sign = 1.0 - 2.0 * (data.labeled_x == 0)
        acc += float(np.sum(sign * data.labeled_y))
    if data.n:
        q = expit(-2.0 * data.unlabeled_y * float(theta_t))
        acc += float(np.sum((1.0 - 2.0 * q) * data.unlabeled_y))
    return acc / total


def m_step(kind: ModelKind, data, theta_t: MixtureParams) -> MixtureParams:
    """Dispatch the family-appropriate M-step on MixtureParams."""
    if kind.tag == "gmm":
        return m_step_gmm(data, theta_t)
    if kind.tag == "expfam":
        return m_step_expfam(kind.spec, data, theta_t)
    return MixtureParams.symmetric(m_step_sym2(data, theta_t.sym2_scalar()))


def run_em(kind: ModelKind, data, theta0: MixtureParams, cfg: EmConfig,
           theta_star: MixtureParams | None = None) -> Trajectory:
    """Iterate the M-step from ``theta0`` until the parameter change drops
    below ``cfg.tol`` or ``cfg.max_iters`` steps have run.

    M-step failures propagate with the iteration index attached as an
    ``iteration`` attribute on the exception.
    """
    kind.check_params(theta0)
    traj = Trajectory(iterates=[theta0])
    if theta_star is not None:
        traj.errors.append(_max_error(theta0, theta_star))
    current = theta0
    for t in range(cfg.max_iters):
        try:
            nxt = m_step(kind, data, current)
        except Exception as exc:
            exc.iteration = t
            raise
        if cfg.record_trajectory:
            traj.q_values.append(q_value(kind, data, nxt, current))
        traj.iterates.append(nxt)
        if theta_star is not None:
            traj.errors.append(_max_error(nxt, theta_star))
        delta = float(np.max(np.abs(nxt.theta - current.theta)))
        current = nxt
        if delta < cfg.tol:
            break
    return traj
