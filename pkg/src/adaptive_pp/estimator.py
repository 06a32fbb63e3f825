"""Projection estimators for the incremental model, plus their runtime audit.

Two update laws share the prediction error e(t+1) = ybar(t+1) - psi(t)' thetahat(t):

* classical: thetahat gets psi(t) e(t+1) / (mu + ||psi(t)||^2), mu > 0, then
  is clipped back into the parameter box;
* ideal: the same with mu = 0 and an explicit freeze when psi(t) = 0, which
  makes the post-update prediction interpolate ybar(t+1) exactly.

Both keep the estimate inside the box, and because clipping onto a box is
non-expansive toward any box member the parameter error obeys, step by step,

    ||err(t+1)||^2 <= ||err(t)||^2 - e^2/(2(mu+||psi||^2)) + 2 wbar^2/(mu+||psi||^2),

where wbar is the disturbance increment the incremental model actually saw.
On stretches where ||psi(t)||^2 >= mu the same algebra gives the sharper
-e^2/(4||psi||^2) + 2 wbar^2/||psi||^2 form and the step-size cap
||thetahat(t+1) - thetahat(t)|| <= |e(t+1)|/||psi(t)||.  `estimator_audit`
checks all three facts on recorded trajectories; a violation beyond rounding
tolerance always indicates an implementation bug, never bad data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plant import BoxSet

__all__ = [
    "EstimatorState",
    "EstimatorAudit",
    "project_box",
    "predict_error",
    "update_classical",
    "update_ideal",
    "update",
    "estimator_audit",
]

MODES = ("classical", "ideal")


def project_box(x, box: BoxSet) -> np.ndarray:
    """Euclidean projection onto a box: coordinatewise clipping."""
    return box.clip(x)


@dataclass(frozen=True)
class EstimatorState:
    """Current estimate, regularizer, parameter box, and update-law choice."""

    theta_hat: np.ndarray
    mu: float
    box: BoxSet
    mode: str = "classical"

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta_hat, dtype=float)).copy()
        if theta.ndim != 1 or theta.size != self.box.dim:
            raise ValueError("estimate length must match the box dimension")
        if not self.box.contains(theta):
            raise ValueError("initial estimate must lie inside the parameter box")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "classical" and not self.mu > 0.0:
            raise ValueError("the classical update needs mu > 0")
        if self.mu < 0.0:
            raise ValueError("mu must be nonnegative")
        theta.flags.writeable = False
        object.__setattr__(self, "theta_hat", theta)

    def with_theta(self, theta_hat: np.ndarray) -> "EstimatorState":
        return EstimatorState(theta_hat, self.mu, self.box, self.mode)


def predict_error(est: EstimatorState, psi: np.ndarray, ybar_next: float) -> float:
    """Prediction error e(t+1) = ybar(t+1) - psi(t)' thetahat(t)."""
    return float(ybar_next) - float(np.asarray(psi, dtype=float) @ est.theta_hat)


def update_classical(est: EstimatorState, psi: np.ndarray, ybar_next: float) -> EstimatorState:
    """Regularized gradient step followed by clipping into the box."""
    psi = np.asarray(psi, dtype=float)
    e = predict_error(est, psi, ybar_next)
    check = est.theta_hat + psi * (e / (est.mu + float(psi @ psi)))
    return est.with_theta(project_box(check, est.box))


def update_ideal(est: EstimatorState, psi: np.ndarray, ybar_next: float) -> EstimatorState:
    """Exact-interpolation step; the estimate freezes when the regressor vanishes."""
    psi = np.asarray(psi, dtype=float)
    norm_sq = float(psi @ psi)
    if norm_sq == 0.0:
        return est
    e = predict_error(est, psi, ybar_next)
    check = est.theta_hat + psi * (e / norm_sq)
    return est.with_theta(project_box(check, est.box))


def update(est: EstimatorState, psi: np.ndarray, ybar_next: float) -> EstimatorState:
    return update_classical(est, psi, ybar_next) if est.mode == "classical" else update_ideal(est, psi, ybar_next)


@dataclass(frozen=True)
class EstimatorAudit:
    """Outcome of checking the update-law energy inequalities on a trajectory.

    Slack is the inequality's right side minus its left side; the audits pass
    when every slack stays above -tol.  Pair checks cover every consecutive
    step plus all dyadically spaced (tau, t) pairs, which telescoping makes
    representative of the full pair set.
    """

    theta_err_sq: np.ndarray       # ||thetahat(t) - theta_star||^2 per record
    e_terms: np.ndarray            # e(t+1)^2 / (mu + ||psi(t)||^2) per step
    w_terms: np.ndarray            # wbar(t)^2 / (mu + ||psi(t)||^2) per step
    min_slack_energy: float        # worst cumulative slack, regularized form
    violations_energy: int
    min_slack_interval: float      # worst cumulative slack on >=mu stretches
    violations_interval: int
    max_step_excess: float         # worst (step size - |e|/||psi||) on >=mu stretches
    violations_step: int
    pairs_checked: int
    tol: float

    @property
    def violations(self) -> int:
        return self.violations_energy + self.violations_interval + self.violations_step

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _dyadic_pairs(length: int):
    """Lags 1, 2, 4, ... shorter than the index range."""
    lag = 1
    while lag < length:
        yield lag
        lag *= 2


def estimator_audit(
    psi: np.ndarray,
    e: np.ndarray,
    wbar: np.ndarray,
    theta_hat: np.ndarray,
    theta_star: np.ndarray,
    mu: float,
    tol: float = 1e-9,
) -> EstimatorAudit:
    """Check the energy inequalities on logged arrays.

    Row t of the arrays belongs to absolute step t0+t: psi[t] is the
    regressor, e[t] the prediction error produced while stepping to t+1,
    wbar[t] the matching disturbance increment, theta_hat[t] the estimate the
    step started from.  mu = 0 selects the ideal-law form (steps with a zero
    regressor contribute nothing and must leave the estimate unchanged).
    """
    psi = np.asarray(psi, dtype=float)
    e = np.asarray(e, dtype=float)
    wbar = np.asarray(wbar, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    steps = psi.shape[0]
    if not (e.shape[0] == wbar.shape[0] == theta_hat.shape[0] == steps):
        raise ValueError("trajectory arrays must share their leading length")

    err = theta_hat - theta_star
    v = np.einsum("ij,ij->i", err, err)
    psi_sq = np.einsum("ij,ij->i", psi, psi)

    denom = mu + psi_sq
    safe = denom > 0.0
    e_terms = np.where(safe, e**2 / np.where(safe, denom, 1.0), 0.0)
    w_terms = np.where(safe, wbar**2 / np.where(safe, denom, 1.0), 0.0)

    pairs = 0
    min_slack_energy = np.inf
    violations_energy = 0
    if steps >= 2:
        # decrease terms for the step t -> t+1, defined for t = 0..steps-2
        d = (-0.5 * e_terms + 2.0 * w_terms)[: steps - 1]
        prefix = np.concatenate(([0.0], np.cumsum(d)))
        # slack(tau, t) = v[tau] - v[t] + sum_{j=tau}^{t-1} d[j]
        for lag in _dyadic_pairs(steps):
            slack = v[:-lag] - v[lag:] + (prefix[lag:] - prefix[:-lag])
            min_slack_energy = min(min_slack_energy, float(slack.min()))
            violations_energy += int((slack < -tol).sum())
            pairs += slack.size

    # sharper form on maximal stretches where ||psi||^2 >= mu
    min_slack_interval = np.inf
    violations_interval = 0
    max_step_excess = -np.inf
    violations_step = 0
    active = psi_sq >= mu
    if mu == 0.0:
        active = psi_sq > 0.0
    t = 0
    while t < steps:
        if not active[t]:
            t += 1
            continue
        start = t
        while t < steps and active[t]:
            t += 1
        stop = t  # stretch [start, stop)
        # step-size cap needs the next estimate, so the last record is exempt
        for j in range(start, min(stop, steps - 1)):
            norm = float(np.sqrt(psi_sq[j]))
            if norm == 0.0:
                continue
            step = float(np.linalg.norm(theta_hat[j + 1] - theta_hat[j]))
            excess = step - abs(e[j]) / norm
            max_step_excess = max(max_step_excess, excess)
            if excess > tol:
                violations_step += 1
        hi = min(stop, steps)  # estimates exist for every record in the stretch
        length = hi - start
        if length >= 2:
            with np.errstate(divide="ignore", invalid="ignore"):
                d2 = np.where(
                    psi_sq[start : hi - 1] > 0.0,
                    -0.25 * e[start : hi - 1] ** 2 / psi_sq[start : hi - 1]
                    + 2.0 * wbar[start : hi - 1] ** 2 / psi_sq[start : hi - 1],
                    0.0,
                )
            prefix2 = np.concatenate(([0.0], np.cumsum(d2)))
            vv = v[start:hi]
            for lag in _dyadic_pairs(length):
                slack = vv[:-lag] - vv[lag:] + (prefix2[lag:] - prefix2[:-lag])
                min_slack_interval = min(min_slack_interval, float(slack.min()))
                violations_interval += int((slack < -tol).sum())
                pairs += slack.size

    return EstimatorAudit(
        theta_err_sq=v,
        e_terms=e_terms,
        w_terms=w_terms,
        min_slack_energy=float(min_slack_energy),
        violations_energy=violations_energy,
        min_slack_interval=float(min_slack_interval),
        violations_interval=violations_interval,
        max_step_excess=float(max_step_excess),
        violations_step=violations_step,
        pairs_checked=pairs,
        tol=tol,
    )
