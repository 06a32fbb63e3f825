"""Closed-loop simulation, trajectory logging, and the audit suite.

`run_closed_loop` wires the pieces together with the update order the design
prescribes: at each step the controller gains come from the estimate held
before the new measurement arrives (a one-step delay), the plant produces
y(t+1), the estimator absorbs the new tracking error, and the next input
increment is K psi(t).  Tracking errors are computed once, at their own time,
against that time's set-point, and the regressor is shifted forward; this
makes the one-step recursion psi(t+1) = A psi(t) + e1 e(t+1) exact even when
the set-point switches.

The logged `wbar` column is the disturbance increment the incremental model
actually saw, ybar(t+1) - psi(t)' theta_star.  It equals w(t) - w(t-1) in
steady operation but also absorbs the start-up mismatch of an arbitrary
initial state and set-point transients; the estimator inequalities and the
crude growth bound are theorems with respect to this signal, so the audits
use it.

Audits available on any trajectory:

* estimator energy inequalities (see `estimator.estimator_audit`),
* exact one-step state recursion (see `controller.state_recursion_audit`),
* frozen-time pole placement, compared in coefficient space where the
  repeated-pole problem is well conditioned,
* the crude growth bound ||psi(t+1)|| <= (alpha + diam) ||psi(t)|| + |wbar(t)|
  with alpha estimated by sampling the parameter box,
* a fitted linear-like gain bound and a settled-tracking check.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .controller import (
    ControllerSolution,
    SingularSylvesterError,
    TargetPolynomial,
    closed_loop_matrix,
    control_step,
    solve_diophantine,
    state_recursion_audit,
)
from .estimator import EstimatorAudit, EstimatorState, estimator_audit, update
from .plant import (
    AuxParameters,
    BoxSet,
    PlantParameters,
    SystemState,
    aux_transform,
    image_box,
    plant_step,
)
from .polynomial import SINGULAR_REL_THRESHOLD

__all__ = [
    "SignalSpec",
    "signal_value",
    "SimConfig",
    "Trajectory",
    "TrajectoryFormatError",
    "ConstantsEstimate",
    "CrudeBoundReport",
    "PoleAuditReport",
    "BoundReport",
    "run_closed_loop",
    "estimate_constants",
    "crude_bound_audit",
    "pole_placement_audit",
    "gain_bound_fit",
    "tracking_audit",
    "monte_carlo_sweep",
    "run_audits",
]

SIGNAL_KINDS = ("constant", "sign_flip", "custom")
THREADS_ENV = "ADAPTIVE_PP_THREADS"


class TrajectoryFormatError(ValueError):
    """A trajectory file does not match the documented schema or the config."""


@dataclass(frozen=True)
class SignalSpec:
    """Exogenous scalar signal: constant, periodic sign flip, or explicit values."""

    kind: str
    magnitude: float = 0.0
    period: int = 1
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"signal kind must be one of {SIGNAL_KINDS}")
        if self.kind == "sign_flip" and (int(self.period) != self.period or self.period < 1):
            raise ValueError("sign_flip needs an integer period >= 1")
        if self.kind == "custom":
            if self.values is None:
                raise ValueError("custom signal needs explicit values")
            vals = np.atleast_1d(np.asarray(self.values, dtype=float))
            if vals.ndim != 1 or not np.all(np.isfinite(vals)):
                raise ValueError("custom signal values must be a finite 1-D sequence")
            vals.flags.writeable = False
            object.__setattr__(self, "values", vals)

    def value(self, elapsed: int) -> float:
        if self.kind == "constant":
            return float(self.magnitude)
        if self.kind == "sign_flip":
            flips = elapsed // int(self.period)
            return float(self.magnitude) * (1.0 if flips % 2 == 0 else -1.0)
        if not 0 <= elapsed < self.values.size:
            raise IndexError(f"custom signal has no value at elapsed step {elapsed}")
        return float(self.values[elapsed])


def signal_value(spec: SignalSpec, elapsed: int) -> float:
    """Signal value ``elapsed`` steps past the start time."""
    return spec.value(elapsed)


@dataclass(frozen=True)
class SimConfig:
    """Everything one closed-loop run depends on.

    `phi0` stacks the initial output and input histories newest first,
    [y(t0)..y(t0-n), u(t0)..u(t0-n)].  `theta0` is the initial estimate in
    incremental coordinates and must lie in the image box of `box`.
    """

    n: int
    theta_true: PlantParameters
    box: BoxSet
    target: TargetPolynomial
    mu: float
    theta0: np.ndarray
    phi0: np.ndarray
    reference: SignalSpec
    disturbance: SignalSpec
    horizon: int
    t0: int = 0
    seed: int = 0
    estimator_mode: str = "classical"
    nudge_singular: bool = False
    lam: float | None = None

    def __post_init__(self):
        theta0 = np.atleast_1d(np.asarray(self.theta0, dtype=float)).copy()
        phi0 = np.atleast_1d(np.asarray(self.phi0, dtype=float)).copy()
        theta0.flags.writeable = False
        phi0.flags.writeable = False
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "phi0", phi0)

    def aux_box(self) -> BoxSet:
        return image_box(self.box, self.n)

    def theta_star(self) -> np.ndarray:
        return aux_transform(self.theta_true).vector

    def decay_rate(self) -> float:
        """Decay rate for the gain-bound fit: configured, else the midpoint."""
        if self.lam is not None:
            return float(self.lam)
        return 0.5 * (self.target.decay_floor() + 1.0)

    def validate(self) -> None:
        n = self.n
        if n < 1 or self.theta_true.n != n or self.target.n != n:
            raise ValueError("plant order, target, and n must agree and be >= 1")
        if self.box.dim != 2 * n:
            raise ValueError(f"the parameter box must have dimension {2 * n}")
        self.theta_true.validate(self.box)
        if self.theta0.shape != (2 * n + 1,):
            raise ValueError(f"theta0 must have length {2 * n + 1}")
        if not self.aux_box().contains(self.theta0):
            raise ValueError("theta0 must lie inside the incremental parameter box")
        if self.phi0.shape != (2 * (n + 1),):
            raise ValueError(f"phi0 must have length {2 * (n + 1)}")
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError("horizon must be an integer >= 1")
        if self.estimator_mode not in ("classical", "ideal"):
            raise ValueError("estimator_mode must be 'classical' or 'ideal'")
        for name, spec in (("reference", self.reference), ("disturbance", self.disturbance)):
            if spec.kind == "custom" and spec.values.size < self.horizon + 1:
                raise ValueError(
                    f"custom {name} needs at least horizon+1 = {self.horizon + 1} values"
                )
        if self.lam is not None:
            floor = self.target.decay_floor()
            if not floor < self.lam < 1.0:
                raise ValueError(f"lam must lie in ({floor:.6f}, 1)")


@dataclass
class Trajectory:
    """Per-step record of one closed-loop run.

    Row i belongs to absolute time t0+i and carries the signals at that time,
    the regressor psi(t), the estimate thetahat(t) the step started from, the
    gain row solved from that estimate (it produces the next input
    increment), the prediction error e(t+1), and the design residual at that
    estimate.  `phi` holds the raw state [y(t)..y(t-n), u(t)..u(t-n)].
    """

    n: int
    t0: int
    mu: float
    estimator_mode: str
    t: np.ndarray
    y: np.ndarray
    u: np.ndarray
    w: np.ndarray
    r: np.ndarray
    ybar: np.ndarray
    ubar: np.ndarray
    wbar: np.ndarray
    e: np.ndarray
    psi: np.ndarray
    theta_hat: np.ndarray
    gains: np.ndarray
    dioph_residual: np.ndarray
    phi: np.ndarray
    config_hash: str = ""
    alpha_bar: float | None = None
    s_bar: float | None = None

    @property
    def steps(self) -> int:
        return self.t.size

    @staticmethod
    def header(n: int) -> list[str]:
        dim = 2 * n + 1
        cols = ["t", "y", "u", "w", "r", "ybar", "ubar", "wbar", "e"]
        cols += [f"psi_{i}" for i in range(1, dim + 1)]
        cols += [f"thetahat_{i}" for i in range(1, dim + 1)]
        cols += [f"K_{i}" for i in range(1, dim + 1)]
        cols.append("dioph_residual")
        return cols

    def to_csv(self) -> str:
        """Render the documented column schema; floats carry 17 significant digits."""
        lines = [",".join(self.header(self.n))]
        for i in range(self.steps):
            row = [str(int(self.t[i]))]
            scalars = (
                self.y[i], self.u[i], self.w[i], self.r[i],
                self.ybar[i], self.ubar[i], self.wbar[i], self.e[i],
            )
            row += [f"{v:.17g}" for v in scalars]
            row += [f"{v:.17g}" for v in self.psi[i]]
            row += [f"{v:.17g}" for v in self.theta_hat[i]]
            row += [f"{v:.17g}" for v in self.gains[i]]
            row.append(f"{self.dioph_residual[i]:.17g}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, cfg: SimConfig) -> "Trajectory":
        """Parse an exported trajectory and rebuild the in-memory form.

        The header, column count, row count, and time axis must match the
        config exactly; the raw state phi is reconstructed from the y and u
        columns seeded with the config's phi0.
        """
        n = cfg.n
        dim = 2 * n + 1
        lines = [ln for ln in text.split("\n") if ln != ""]
        if not lines:
            raise TrajectoryFormatError("empty trajectory file")
        header = lines[0].split(",")
        if header != cls.header(n):
            raise TrajectoryFormatError("trajectory header does not match the schema")
        rows = lines[1:]
        if len(rows) != cfg.horizon:
            raise TrajectoryFormatError(
                f"expected {cfg.horizon} rows for this config, found {len(rows)}"
            )
        width = len(cls.header(n))
        data = np.empty((len(rows), width))
        for i, ln in enumerate(rows):
            parts = ln.split(",")
            if len(parts) != width:
                raise TrajectoryFormatError(f"row {i} has {len(parts)} fields, expected {width}")
            try:
                data[i] = [float(p) for p in parts]
            except ValueError as err:
                raise TrajectoryFormatError(f"row {i} is not numeric: {err}") from err
        t = data[:, 0]
        expected_t = cfg.t0 + np.arange(len(rows))
        if not np.array_equal(t, expected_t.astype(float)):
            raise TrajectoryFormatError("time column does not match the config start and horizon")

        y, u = data[:, 1], data[:, 2]
        state = SystemState.from_phi(cfg.phi0, n, cfg.t0)
        if y[0] != state.y[0] or u[0] != state.u[0]:
            raise TrajectoryFormatError("first row is inconsistent with the config's phi0")
        phi = np.empty((len(rows), 2 * (n + 1)))
        for i in range(len(rows)):
            if i > 0:
                state.advance(y[i], u[i])
            phi[i] = state.phi()

        c = 9
        return cls(
            n=n,
            t0=cfg.t0,
            mu=cfg.mu,
            estimator_mode=cfg.estimator_mode,
            t=t.astype(int),
            y=y.copy(),
            u=u.copy(),
            w=data[:, 3].copy(),
            r=data[:, 4].copy(),
            ybar=data[:, 5].copy(),
            ubar=data[:, 6].copy(),
            wbar=data[:, 7].copy(),
            e=data[:, 8].copy(),
            psi=data[:, c : c + dim].copy(),
            theta_hat=data[:, c + dim : c + 2 * dim].copy(),
            gains=data[:, c + 2 * dim : c + 3 * dim].copy(),
            dioph_residual=data[:, c + 3 * dim].copy(),
            phi=phi,
        )


def run_closed_loop(cfg: SimConfig, config_hash: str = "") -> Trajectory:
    """Simulate the adaptive loop for cfg.horizon steps.

    Raises SingularSylvesterError (annotated with the failing step) if the
    design becomes unsolvable at some estimate; with cfg.nudge_singular the
    estimate is first pushed a millionth of the box width toward the box
    center and the solve retried once.
    """
    cfg.validate()
    n = cfg.n
    dim = 2 * n + 1
    aux_box = cfg.aux_box()
    theta_star = cfg.theta_star()

    state = SystemState.from_phi(cfg.phi0, n, cfg.t0)
    r0 = cfg.reference.value(0)
    ybar_hist = state.y - r0
    ubar_hist = state.u[:-1] - state.u[1:]
    psi = np.concatenate((ybar_hist, ubar_hist))

    est = EstimatorState(cfg.theta0, cfg.mu, aux_box, cfg.estimator_mode)

    steps = int(cfg.horizon)
    out = {
        name: np.empty(steps)
        for name in ("y", "u", "w", "r", "ybar", "ubar", "wbar", "e", "dioph_residual")
    }
    t_arr = cfg.t0 + np.arange(steps)
    psi_log = np.empty((steps, dim))
    theta_log = np.empty((steps, dim))
    gain_log = np.empty((steps, dim))
    phi_log = np.empty((steps, 2 * (n + 1)))

    cache_key: bytes | None = None
    cache_sol: ControllerSolution | None = None

    for i in range(steps):
        t = cfg.t0 + i
        r_t = cfg.reference.value(i)
        w_t = cfg.disturbance.value(i)
        theta_t = est.theta_hat

        key = theta_t.tobytes()
        if key != cache_key:
            try:
                sol = solve_diophantine(theta_t, cfg.target)
            except SingularSylvesterError as err:
                if not cfg.nudge_singular:
                    raise SingularSylvesterError(
                        err.margin, err.threshold, err.rcond, err.theta_hat, step=t
                    ) from err
                nudged = aux_box.clip(
                    theta_t + 1e-6 * aux_box.width * np.sign(aux_box.center - theta_t)
                )
                try:
                    sol = solve_diophantine(nudged, cfg.target)
                except SingularSylvesterError as err2:
                    raise SingularSylvesterError(
                        err2.margin, err2.threshold, err2.rcond, err2.theta_hat, step=t
                    ) from err2
                theta_t = nudged
                est = est.with_theta(nudged)
                key = theta_t.tobytes()
            cache_key, cache_sol = key, sol
        sol = cache_sol

        out["y"][i] = state.y[0]
        out["u"][i] = state.u[0]
        out["w"][i] = w_t
        out["r"][i] = r_t
        out["ybar"][i] = ybar_hist[0]
        out["ubar"][i] = ubar_hist[0]
        out["dioph_residual"][i] = sol.residual
        psi_log[i] = psi
        theta_log[i] = theta_t
        gain_log[i] = sol.K
        phi_log[i] = state.phi()

        y_next = plant_step(cfg.theta_true, state, state.u[0], w_t)
        r_next = cfg.reference.value(i + 1)
        ybar_next = y_next - r_next
        e_next = ybar_next - float(psi @ theta_t)
        out["e"][i] = e_next
        out["wbar"][i] = ybar_next - float(psi @ theta_star)

        est = update(est, psi, ybar_next)
        ubar_next, u_next = control_step(sol, psi, state.u[0])

        state.advance(y_next, u_next, w_t)
        state.r = r_next
        ybar_hist[1:] = ybar_hist[:-1]
        ybar_hist[0] = ybar_next
        if n >= 2:
            ubar_hist[1:] = ubar_hist[:-1]
        ubar_hist[0] = ubar_next
        psi = np.concatenate((ybar_hist, ubar_hist))

    return Trajectory(
        n=n,
        t0=cfg.t0,
        mu=cfg.mu,
        estimator_mode=cfg.estimator_mode,
        t=t_arr,
        y=out["y"],
        u=out["u"],
        w=out["w"],
        r=out["r"],
        ybar=out["ybar"],
        ubar=out["ubar"],
        wbar=out["wbar"],
        e=out["e"],
        psi=psi_log,
        theta_hat=theta_log,
        gains=gain_log,
        dioph_residual=out["dioph_residual"],
        phi=phi_log,
        config_hash=config_hash,
    )


# ---------------------------------------------------------------------------
# sampled constants and the crude growth bound


@dataclass(frozen=True)
class ConstantsEstimate:
    """Sampled closed-loop norm bound and the exact box diameter."""

    alpha_bar: float
    s_bar: float
    samples_used: int
    samples_skipped: int


def _batch_gains(thetas: np.ndarray, lifted: np.ndarray, n: int):
    """Vectorized design solve; returns (ok mask, gain rows for ok samples)."""
    count = thetas.shape[0]
    dim = 2 * n + 1
    ca = np.concatenate((np.ones((count, 1)), -thetas[:, : n + 1]), axis=1)
    cb = np.concatenate((np.zeros((count, 1)), thetas[:, n + 1 :]), axis=1)
    m = np.zeros((count, dim, dim))
    for k in range(1, dim + 1):
        for j in range(1, n + 1):
            if 0 <= k - j <= n + 1:
                m[:, k - 1, j - 1] = ca[:, k - j]
        for j in range(1, n + 2):
            if 0 <= k - j <= n:
                m[:, k - 1, n + j - 1] = cb[:, k - j]
    margins = np.abs(np.linalg.det(m))
    inf_norms = np.abs(m).sum(axis=2).max(axis=1)
    ok = margins > SINGULAR_REL_THRESHOLD * np.maximum(1.0, inf_norms)

    rhs = np.tile(lifted[1:], (count, 1))
    rhs[:, : n + 1] -= ca[:, 1:]
    x = np.linalg.solve(m[ok], rhs[ok][:, :, None])[:, :, 0]
    gains = np.concatenate((-x[:, n:], -x[:, :n]), axis=1)
    return ok, gains


def estimate_constants(
    aux_box: BoxSet,
    target: TargetPolynomial,
    samples: int = 100_000,
    seed: int = 0,
) -> ConstantsEstimate:
    """Sample the incremental box for the worst closed-loop matrix norm.

    Draws `samples` uniform points plus every box vertex, solves the design
    at each, and takes the largest induced 2-norm of the assembled
    closed-loop matrix.  Samples with a singular design are skipped and
    counted.  For a fixed seed the draw stream is sequential, so the estimate
    is monotone nondecreasing in `samples`.  The returned s_bar is the exact
    box diameter.
    """
    n = target.n
    dim = 2 * n + 1
    if aux_box.dim != dim:
        raise ValueError(f"expected an incremental box of dimension {dim}")
    rng = np.random.default_rng(seed)
    draws = aux_box.sample(rng, int(samples)) if samples > 0 else np.empty((0, dim))
    thetas = np.concatenate((draws, aux_box.vertices()), axis=0)

    ok, gains = _batch_gains(thetas, target.lifted_coeffs(), n)
    good = thetas[ok]
    count = good.shape[0]
    mats = np.zeros((count, dim, dim))
    mats[:, 0, :] = good
    mats[:, 1 : n + 1, 0:n] = np.eye(n)
    mats[:, n + 1, :] = gains
    if n >= 2:
        mats[:, n + 2 :, n + 1 : 2 * n] = np.eye(n - 1)
    norms = np.linalg.svd(mats, compute_uv=False)[:, 0]
    return ConstantsEstimate(
        alpha_bar=float(norms.max()),
        s_bar=aux_box.diameter(),
        samples_used=count,
        samples_skipped=int(thetas.shape[0] - count),
    )


@dataclass(frozen=True)
class CrudeBoundReport:
    """Stepwise growth-bound check against sampled constants."""

    violations: int
    alpha_used: float
    s_bar: float
    alpha_required: float  # smallest alpha that would clear every step
    max_excess: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def crude_bound_audit(
    traj: Trajectory,
    alpha_bar: float,
    s_bar: float,
    tol: float = 1e-9,
) -> CrudeBoundReport:
    """Check ||psi(t+1)|| <= (alpha + diam) ||psi(t)|| + |wbar(t)| stepwise.

    alpha_bar is a sampled lower estimate of the true supremum, so isolated
    violations indicate undersampling rather than a broken loop;
    `alpha_required` reports how large alpha would have to be.
    """
    norms = np.linalg.norm(traj.psi, axis=1)
    if norms.size < 2:
        return CrudeBoundReport(0, alpha_bar, s_bar, 0.0, -np.inf)
    lhs = norms[1:]
    rhs = (alpha_bar + s_bar) * norms[:-1] + np.abs(traj.wbar[:-1])
    excess = lhs - rhs
    tol_vec = tol * (1.0 + norms[:-1])
    violations = int((excess > tol_vec).sum())
    prev = norms[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        needed = np.where(prev > 0.0, (lhs - np.abs(traj.wbar[:-1])) / prev - s_bar, -np.inf)
    return CrudeBoundReport(
        violations=violations,
        alpha_used=alpha_bar,
        s_bar=s_bar,
        alpha_required=float(needed.max()),
        max_excess=float(excess.max()),
    )


@dataclass(frozen=True)
class PoleAuditReport:
    """Frozen-time pole check in coefficient space, plus design residuals."""

    max_coeff_err: float
    max_residual: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def pole_placement_audit(
    traj: Trajectory,
    target: TargetPolynomial,
    tol: float = 1e-9,
) -> PoleAuditReport:
    """Compare each step's closed-loop characteristic polynomial to the target.

    Eigenvalues of the assembled matrix are mapped back to a monic
    polynomial; the coefficients are the well-conditioned object here (the
    placed pole at the origin is repeated with a single Jordan chain, so raw
    eigenvalue positions smear at roughly eps^(1/4) and would say nothing at
    tight tolerances).  The design residual column is rechecked as well.
    """
    lifted = target.lifted_coeffs()
    scale = 1.0 + float(np.abs(lifted).max())
    dim = lifted.size - 1
    mats = np.zeros((traj.steps, dim, dim))
    n = traj.n
    mats[:, 0, :] = traj.theta_hat
    mats[:, 1 : n + 1, 0:n] = np.eye(n)
    mats[:, n + 1, :] = traj.gains
    if n >= 2:
        mats[:, n + 2 :, n + 1 : 2 * n] = np.eye(n - 1)
    eig = np.linalg.eigvals(mats)
    max_err = 0.0
    for row in eig:
        coeffs = np.poly(row)
        max_err = max(max_err, float(np.abs(coeffs - lifted).max()))
    res_max = float(traj.dioph_residual.max())
    violations = int(max_err > tol * scale) + int(res_max > tol * scale)
    return PoleAuditReport(max_coeff_err=max_err, max_residual=res_max, violations=violations)


# ---------------------------------------------------------------------------
# linear-like gain bound and tracking


@dataclass(frozen=True)
class BoundReport:
    """Fitted linear-like bound and audit tallies for one run or a family."""

    gamma: float
    lam: float
    residual_floor: float
    tail_tracking: float
    violations: int = 0
    details: dict = field(default_factory=dict)
    draw: int | None = None
    mu: float | None = None
    seed: int | None = None
    aborted: bool = False

    @property
    def passed(self) -> bool:
        return self.violations == 0 and not self.aborted


def _fit_single(traj: Trajectory, lam: float) -> tuple[float, float, float]:
    """Minimal gamma, residual floor, and tail tracking error for one run."""
    steps = traj.steps
    phi_norm = np.linalg.norm(traj.phi, axis=1)
    phi0_norm = phi_norm[0]
    r_mag = float(np.abs(traj.r).max())
    offset = r_mag + np.sqrt(traj.mu)

    conv = np.empty(steps)
    conv[0] = 0.0
    for i in range(steps - 1):
        conv[i + 1] = lam * conv[i] + abs(traj.w[i])
    denom = phi0_norm * lam ** np.arange(steps) + offset + conv
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(denom > 0.0, phi_norm / np.where(denom > 0.0, denom, 1.0), 0.0)
    gamma = float(ratios.max())

    psi_norm = np.linalg.norm(traj.psi, axis=1)
    floor_start = (3 * steps) // 4
    residual_floor = float(psi_norm[floor_start:].max())
    tail = min(100, max(1, steps // 4))
    tail_tracking = float(np.abs(traj.ybar[-tail:]).max())
    return gamma, residual_floor, tail_tracking


def gain_bound_fit(trajs, lam: float, target: TargetPolynomial) -> BoundReport:
    """Fit the smallest gamma making the linear-like bound hold on the runs.

    The bound compares ||phi(t)|| against gamma times
    lam^(t-t0) ||phi0|| + (|r| + sqrt(mu)) + sum_j lam^(t-1-j) |w(j)|,
    so lam must sit strictly between the largest target pole modulus and 1.
    """
    floor = target.decay_floor()
    if not floor < lam < 1.0:
        raise ValueError(f"lam must lie in ({floor:.6f}, 1), got {lam}")
    if isinstance(trajs, Trajectory):
        trajs = [trajs]
    if not trajs:
        raise ValueError("need at least one trajectory")
    gammas, floors, tails = zip(*(_fit_single(tr, lam) for tr in trajs))
    return BoundReport(
        gamma=float(max(gammas)),
        lam=float(lam),
        residual_floor=float(max(floors)),
        tail_tracking=float(max(tails)),
    )


def tracking_audit(traj: Trajectory, tail: int = 100, settle: int | None = None) -> float:
    """Largest |ybar| over the final `tail` steps of a settled run.

    Demands constant reference and disturbance over the tail plus a settling
    prefix (default: another `tail` steps), since the asymptotic-tracking
    guarantee only speaks about constant excitation.
    """
    if tail < 1:
        raise ValueError("tail must be >= 1")
    settle = tail if settle is None else settle
    window = tail + settle
    if traj.steps < window:
        raise ValueError(f"trajectory too short: need {window} steps, have {traj.steps}")
    r_win = traj.r[-window:]
    w_win = traj.w[-window:]
    if not (np.all(r_win == r_win[0]) and np.all(w_win == w_win[0])):
        raise ValueError("reference and disturbance must be constant over the audited window")
    return float(np.abs(traj.ybar[-tail:]).max())


# ---------------------------------------------------------------------------
# audit orchestration and the Monte Carlo sweep

AUDIT_NAMES = ("estimator", "recursion", "poles", "crude_bound", "tracking")


def run_audits(
    traj: Trajectory,
    cfg: SimConfig,
    which: tuple[str, ...] | list[str] = ("estimator", "recursion", "poles"),
    constants: ConstantsEstimate | None = None,
    tracking_tail: int = 100,
    tol: float = 1e-9,
) -> dict:
    """Run the selected audits on one trajectory; returns name -> result dict.

    Every result dict carries `violations` (int) and `pass` (bool) plus
    audit-specific diagnostics, ready for a manifest.
    """
    results: dict = {}
    for name in which:
        if name not in AUDIT_NAMES:
            raise ValueError(f"unknown audit '{name}'; choose from {AUDIT_NAMES}")
    if "estimator" in which:
        mu = cfg.mu if traj.estimator_mode == "classical" else 0.0
        audit = estimator_audit(
            traj.psi, traj.e, traj.wbar, traj.theta_hat, cfg.theta_star(), mu, tol=tol
        )
        results["estimator"] = {
            "violations": audit.violations,
            "pass": audit.passed,
            "min_slack_energy": audit.min_slack_energy,
            "min_slack_interval": audit.min_slack_interval,
            "max_step_excess": audit.max_step_excess,
            "pairs_checked": audit.pairs_checked,
        }
    if "recursion" in which:
        residual = state_recursion_audit(traj.psi, traj.theta_hat, traj.gains, traj.e)
        scale = 1.0 + float(np.linalg.norm(traj.psi, axis=1).max(initial=0.0))
        bad = int(residual > tol * scale)
        results["recursion"] = {"violations": bad, "pass": bad == 0, "max_residual": residual}
    if "poles" in which:
        report = pole_placement_audit(traj, cfg.target, tol=tol)
        results["poles"] = {
            "violations": report.violations,
            "pass": report.passed,
            "max_coeff_err": report.max_coeff_err,
            "max_residual": report.max_residual,
        }
    if "crude_bound" in which:
        if constants is None:
            constants = estimate_constants(cfg.aux_box(), cfg.target, seed=cfg.seed)
        report = crude_bound_audit(traj, constants.alpha_bar, constants.s_bar, tol=tol)
        results["crude_bound"] = {
            "violations": report.violations,
            "pass": report.passed,
            "alpha_bar": report.alpha_used,
            "s_bar": report.s_bar,
            "alpha_required": report.alpha_required,
        }
    if "tracking" in which:
        err = tracking_audit(traj, tail=tracking_tail)
        results["tracking"] = {"violations": 0, "pass": True, "tail_max_error": err}
    return results


def _sample_plant(box: BoxSet, n: int, rng: np.random.Generator, tries: int = 100) -> PlantParameters:
    """Uniform plant draw satisfying the standing assumptions."""
    for _ in range(tries):
        vec = box.sample(rng)
        theta = PlantParameters(vec[:n], vec[n:])
        try:
            theta.validate(box)
        except ValueError:
            continue
        return theta
    raise RuntimeError(f"no admissible plant found in {tries} draws from the box")


def monte_carlo_sweep(
    cfg: SimConfig,
    draws: int,
    seed: int | None = None,
    overrides: dict | None = None,
    horizon: int | None = None,
    alpha_samples: int = 100_000,
    audits: tuple[str, ...] = ("estimator", "recursion", "poles", "crude_bound"),
) -> list[BoundReport]:
    """Repeated, optionally randomized runs of a base config, audited draw by draw.

    With no `overrides` every draw replays the base config, so draws=1 is a
    single closed-loop run plus audits.  `overrides` switches randomizations
    on: `theta` (True: redraw the plant uniformly from the box), `theta0`
    (True: redraw the initial estimate from the incremental box), `mu`
    ((lo, hi): log-uniform), `phi0` (scale c: uniform on [-c, c]).  Draw
    parameters are generated up front from the seed, so results do not depend
    on the worker count; the ADAPTIVE_PP_THREADS environment variable caps
    thread parallelism.  A draw whose design equation goes singular is
    reported as aborted rather than killing the sweep.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    cfg.validate()
    seed = cfg.seed if seed is None else int(seed)
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"theta", "theta0", "mu", "phi0"}
    if unknown:
        raise ValueError(f"unknown override keys: {sorted(unknown)}")
    use_theta = bool(overrides.get("theta", False))
    use_theta0 = bool(overrides.get("theta0", False))
    mu_range = overrides.get("mu")
    phi0_scale = overrides.get("phi0")

    n = cfg.n
    aux_box = cfg.aux_box()
    rng = np.random.default_rng(seed)
    configs: list[SimConfig] = []
    for _ in range(draws):
        theta = _sample_plant(cfg.box, n, rng) if use_theta else cfg.theta_true
        theta0 = aux_box.sample(rng) if use_theta0 else cfg.theta0
        if mu_range is None:
            mu = cfg.mu
        else:
            lo, hi = float(mu_range[0]), float(mu_range[1])
            mu = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        if phi0_scale is None:
            phi0 = cfg.phi0
        else:
            phi0 = rng.uniform(-float(phi0_scale), float(phi0_scale), size=2 * (n + 1))
        configs.append(
            replace(
                cfg,
                theta_true=theta,
                theta0=theta0,
                mu=mu,
                phi0=phi0,
                horizon=horizon if horizon is not None else cfg.horizon,
            )
        )

    lam = cfg.decay_rate()
    need_constants = "crude_bound" in audits
    constants = (
        estimate_constants(aux_box, cfg.target, samples=alpha_samples, seed=seed)
        if need_constants
        else None
    )

    def one(idx: int) -> BoundReport:
        c = configs[idx]
        try:
            traj = run_closed_loop(c)
        except SingularSylvesterError:
            return BoundReport(
                gamma=float("nan"),
                lam=lam,
                residual_floor=float("nan"),
                tail_tracking=float("nan"),
                violations=0,
                details={},
                draw=idx,
                mu=c.mu,
                seed=seed,
                aborted=True,
            )
        results = run_audits(traj, c, which=audits, constants=constants)
        detail = {name: res["violations"] for name, res in results.items()}
        fit = gain_bound_fit(traj, lam, cfg.target)
        return BoundReport(
            gamma=fit.gamma,
            lam=lam,
            residual_floor=fit.residual_floor,
            tail_tracking=fit.tail_tracking,
            violations=sum(detail.values()),
            details=detail,
            draw=idx,
            mu=c.mu,
            seed=seed,
        )

    workers = max(1, int(os.environ.get(THREADS_ENV, "1")))
    workers = min(workers, draws)
    if workers == 1:
        return [one(i) for i in range(draws)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(draws)))
