"""Certainty-equivalence pole placement for the incremental model.

Given an estimate thetahat = [abarhat_1..abarhat_{n+1}, bhat_1..bhat_n] and a
stable monic target polynomial Astar of declared degree 2n+1, the design
solves the polynomial identity

    Abarhat(z^{-1}) L(z^{-1}) + Bhat(z^{-1}) P(z^{-1}) = Astar(z^{-1}),

with L monic of degree n and P of degree n+1 with zero constant term, as one
dense (2n+1) x (2n+1) linear system.  The control law applies the input
increment ubar(t) = K psi(t-1) with gain row K = [-p_1..-p_{n+1}, -l_1..-l_n],
one step behind the estimator.

Stacking the regressor shift structure, the estimate row, and the gain row
gives the closed-loop matrix whose characteristic polynomial is exactly
z^{2n+1} Astar(z^{-1}); `state_recursion_audit` checks the one-step identity
psi(t+1) = A psi(t) + e1 e(t+1) on recorded trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plant import AuxParameters
from .polynomial import (
    Polynomial,
    poly_mul,
    singularity_threshold,
    spectral_radius,
    sylvester_matrix,
    sylvester_rcond,
)

__all__ = [
    "SingularSylvesterError",
    "TargetPolynomial",
    "ControllerSolution",
    "solve_diophantine",
    "control_step",
    "closed_loop_matrix",
    "state_recursion_audit",
    "rank_one_correction",
]

class SingularSylvesterError(RuntimeError):
    """The pole-placement system is numerically singular at this estimate."""

    def __init__(self, margin: float, threshold: float, rcond: float, theta_hat: np.ndarray, step: int | None = None):
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"pole-placement system singular{where}: |det| = {margin:.3e} "
            f"<= threshold {threshold:.3e} (rcond ~ {rcond:.3e})"
        )
        self.margin = margin
        self.threshold = threshold
        self.rcond = rcond
        self.theta_hat = np.array(theta_hat, dtype=float)
        self.step = step


@dataclass(frozen=True)
class TargetPolynomial:
    """Validated closed-loop target: monic, degree <= 2n+1, strictly stable."""

    poly: Polynomial
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not self.poly.is_monic:
            raise ValueError("the target polynomial must be monic")
        if self.poly.degree > 2 * self.n + 1:
            raise ValueError(
                f"target degree {self.poly.degree} exceeds the placeable degree {2 * self.n + 1}"
            )
        radius = spectral_radius(self.poly, 2 * self.n + 1)
        if radius >= 1.0:
            raise ValueError(f"target polynomial is not stable (spectral radius {radius:.6f})")

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def lifted_coeffs(self) -> np.ndarray:
        """Coefficients padded to the full placeable degree 2n+1."""
        return self.poly.padded(self.dim).coeffs

    def decay_floor(self) -> float:
        """Largest closed-loop pole modulus; any decay rate must exceed it."""
        return spectral_radius(self.poly, self.dim)


@dataclass(frozen=True)
class ControllerSolution:
    """Solved design at one estimate: polynomials, gain row, and diagnostics."""

    L: Polynomial
    P: Polynomial
    K: np.ndarray
    residual: float
    margin: float

    def __post_init__(self):
        k = np.asarray(self.K, dtype=float).copy()
        k.flags.writeable = False
        object.__setattr__(self, "K", k)


def _split_estimate(theta_hat, n: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(theta_hat, AuxParameters):
        return theta_hat.abar, theta_hat.b
    vec = np.asarray(theta_hat, dtype=float)
    if vec.shape != (2 * n + 1,):
        raise ValueError(f"expected an estimate vector of length {2 * n + 1}")
    return vec[: n + 1], vec[n + 1 :]


def solve_diophantine(theta_hat, target: TargetPolynomial) -> ControllerSolution:
    """Solve the pole-placement identity at one estimate.

    Raises SingularSylvesterError when |det| of the system matrix falls at or
    below the shared relative singularity threshold.
    """
    n = target.n
    abar_hat, b_hat = _split_estimate(theta_hat, n)
    abar_poly = Polynomial(np.concatenate(([1.0], -abar_hat)))
    b_poly = Polynomial(np.concatenate(([0.0], b_hat)))

    m = sylvester_matrix(abar_poly, b_poly, n)
    margin = float(abs(np.linalg.det(m)))
    threshold = singularity_threshold(m)
    if margin <= threshold:
        raise SingularSylvesterError(margin, threshold, sylvester_rcond(m), np.concatenate((abar_hat, b_hat)))

    lifted = target.lifted_coeffs()
    rhs = lifted[1:] - abar_poly.padded(target.dim).coeffs[1:]
    x = np.linalg.solve(m, rhs)
    l_coef, p_coef = x[:n], x[n:]

    L = Polynomial(np.concatenate(([1.0], l_coef)))
    P = Polynomial(np.concatenate(([0.0], p_coef)))
    recon = poly_mul(abar_poly, L, fixed_degree=target.dim).coeffs + poly_mul(
        b_poly, P, fixed_degree=target.dim
    ).coeffs
    residual = float(np.abs(recon - lifted).max())
    K = np.concatenate((-p_coef, -l_coef))
    return ControllerSolution(L=L, P=P, K=K, residual=residual, margin=margin)


def control_step(sol: ControllerSolution, psi_prev: np.ndarray, u_prev: float) -> tuple[float, float]:
    """Input increment ubar(t) = K psi(t-1) and the applied input u(t)."""
    psi_prev = np.asarray(psi_prev, dtype=float)
    if psi_prev.shape != sol.K.shape:
        raise ValueError("regressor length does not match the gain row")
    ubar = float(sol.K @ psi_prev)
    return ubar, float(u_prev) + ubar


def closed_loop_matrix(theta_hat, K: np.ndarray, n: int | None = None) -> np.ndarray:
    """Frozen-estimate transition matrix of the regressor recursion.

    Rows, top to bottom: the estimate row (produces ybar(t+1) up to the
    prediction error), the output-block shift, the gain row (produces
    ubar(t+1)), and the input-block shift.  Its characteristic polynomial is
    z^{2n+1} Astar(z^{-1}) whenever K solves the design at theta_hat.
    """
    if isinstance(theta_hat, AuxParameters):
        vec = theta_hat.vector
    else:
        vec = np.asarray(theta_hat, dtype=float)
    if n is None:
        n = (vec.size - 1) // 2
    dim = 2 * n + 1
    if vec.shape != (dim,):
        raise ValueError(f"expected an estimate vector of length {dim}")
    K = np.asarray(K, dtype=float)
    if K.shape != (dim,):
        raise ValueError(f"expected a gain row of length {dim}")

    a = np.zeros((dim, dim))
    a[0, :] = vec
    a[1 : n + 1, 0:n] = np.eye(n)
    a[n + 1, :] = K
    if n >= 2:
        a[n + 2 :, n + 1 : 2 * n] = np.eye(n - 1)
    return a


def state_recursion_audit(
    psi: np.ndarray,
    theta_hat: np.ndarray,
    gains: np.ndarray,
    e: np.ndarray,
) -> float:
    """Max infinity-norm residual of psi(t+1) = A psi(t) + e1 e(t+1).

    All arguments are per-record arrays; rows t and t+1 of psi bracket the
    transition driven by theta_hat[t], gains[t], and e[t].  The identity is
    exact by construction, so anything beyond rounding noise means the
    simulation and the recursion disagree.
    """
    psi = np.asarray(psi, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    gains = np.asarray(gains, dtype=float)
    e = np.asarray(e, dtype=float)
    steps, dim = psi.shape
    n = (dim - 1) // 2
    if steps < 2:
        return 0.0

    predicted = np.empty((steps - 1, dim))
    # estimate row plus the innovation
    predicted[:, 0] = np.einsum("ij,ij->i", theta_hat[:-1], psi[:-1]) + e[:-1]
    # output-block shift
    predicted[:, 1 : n + 1] = psi[:-1, 0:n]
    # gain row
    predicted[:, n + 1] = np.einsum("ij,ij->i", gains[:-1], psi[:-1])
    # input-block shift
    if n >= 2:
        predicted[:, n + 2 :] = psi[:-1, n + 1 : 2 * n]
    return float(np.abs(predicted - psi[1:]).max())


def rank_one_correction(psi: np.ndarray, e_next: float) -> np.ndarray:
    """Matrix e1 (e(t+1)/||psi(t)||^2) psi(t)' closing the recursion exactly.

    Satisfies (A + correction - e1 thetahat') psi = A psi + e1 e(t+1) - ...,
    i.e. correction @ psi = e1 e(t+1).  Undefined for a zero regressor.
    """
    psi = np.asarray(psi, dtype=float)
    norm_sq = float(psi @ psi)
    if norm_sq == 0.0:
        raise ValueError("the correction is undefined for a zero regressor")
    out = np.zeros((psi.size, psi.size))
    out[0, :] = (float(e_next) / norm_sq) * psi
    return out
