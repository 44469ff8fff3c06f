"""Condensed MPC quadratic programs with an equality allocation constraint.

Each local problem reads

    minimize   1/2 U^T H U + f^T U
    subject to Theta U = theta        (multiplier lambda)

and its multiplier is affine in the allocation, ``lambda = -P theta - s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidParameterError, ShapeError, SolverError
from .lti import DiscreteLTI


def _freeze(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MpcWeights:
    """Stage weights ``Q`` (state, PSD), ``R`` (input, PD) and horizon ``Np``."""

    Q: np.ndarray
    R: np.ndarray
    Np: int

    def __post_init__(self):
        Q = _freeze(np.atleast_2d(self.Q))
        R = _freeze(np.atleast_2d(self.R))
        if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() < -1e-12 * max(1.0, np.abs(Q).max()):
            raise InvalidParameterError("Q must be symmetric positive semidefinite")
        if not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() <= 0:
            raise InvalidParameterError("R must be symmetric positive definite")
        if int(self.Np) != self.Np or self.Np < 1:
            raise InvalidParameterError(f"Np must be a positive integer, got {self.Np}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Np", int(self.Np))


@dataclass(frozen=True)
class LocalQP:
    """One agent's condensed QP.

    ``const`` is the part of the tracking cost that does not depend on U, so
    that the stage-cost sum over the horizon equals
    ``U^T H U + 2 f^T U + const`` (see :meth:`tracking_cost`).
    """

    H: np.ndarray
    f: np.ndarray
    Theta: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        H = _freeze(np.atleast_2d(self.H))
        f = _freeze(np.asarray(self.f, dtype=float).reshape(-1))
        Theta = _freeze(np.atleast_2d(self.Theta))
        cu = H.shape[0]
        if H.shape != (cu, cu) or f.shape != (cu,) or Theta.shape[1] != cu:
            raise ShapeError(f"inconsistent QP shapes H{H.shape} f{f.shape} Theta{Theta.shape}")
        if not np.allclose(H, H.T, rtol=1e-10, atol=0.0):
            raise SolverError("H must be symmetric")
        try:
            np.linalg.cholesky(H)
        except np.linalg.LinAlgError as exc:
            raise SolverError("H is not positive definite") from exc
        if np.linalg.matrix_rank(Theta) < Theta.shape[0]:
            raise SolverError("Theta must have full row rank")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "Theta", Theta)
        object.__setattr__(self, "const", float(self.const))

    @property
    def c(self) -> int:
        """Length of the allocation sequence."""
        return self.Theta.shape[0]

    def objective(self, U) -> float:
        U = np.asarray(U, dtype=float)
        return float(0.5 * U @ self.H @ U + self.f @ U)

    def tracking_cost(self, U) -> float:
        """Sum of weighted stage costs on the predicted trajectory."""
        return 2.0 * self.objective(U) + self.const


@dataclass(frozen=True)
class Sensitivity:
    P: np.ndarray
    s: np.ndarray

    def dual(self, theta) -> np.ndarray:
        return -self.P @ np.asarray(theta, dtype=float) - self.s


@dataclass(frozen=True)
class LocalSolution:
    U: np.ndarray
    lam: np.ndarray
    cost: float


def prediction_matrices(sys: DiscreteLTI, Np: int):
    """Stacked predictions X = M x(k) + D U over x(k+1), ..., x(k+Np).

    Returns ``(M, D)`` with block row r of M equal to A^(r+1) and block
    (r, j) of D equal to A^(r-j) B for j <= r.
    """
    if Np < 1:
        raise InvalidParameterError(f"Np must be >= 1, got {Np}")
    n, m = sys.n, sys.m
    M = np.zeros((Np * n, n))
    D = np.zeros((Np * n, Np * m))
    # powers[r] = A^r B
    powers = [sys.B]
    for _ in range(1, Np):
        powers.append(sys.A @ powers[-1])
    Ak = np.eye(n)
    for r in range(Np):
        Ak = sys.A @ Ak
        M[r * n:(r + 1) * n] = Ak
        for j in range(r + 1):
            D[r * n:(r + 1) * n, j * m:(j + 1) * m] = powers[r - j]
    return M, D


def condense(sys: DiscreteLTI, weights: MpcWeights, gamma, x, W) -> LocalQP:
    """Condense the tracking MPC problem at state ``x`` with stacked reference ``W``.

    ``gamma`` maps one input sample to the shared resource; it is repeated
    along the horizon to build Theta. Pass ``W = 0`` for regulation.
    """
    Np = weights.Np
    x = np.asarray(x, dtype=float).reshape(-1)
    W = np.asarray(W, dtype=float).reshape(-1)
    if x.shape[0] != sys.n:
        raise ShapeError(f"state has length {x.shape[0]}, expected {sys.n}")
    if W.shape[0] != Np * sys.n:
        raise ShapeError(f"reference has length {W.shape[0]}, expected {Np * sys.n}")
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    if gamma.shape[1] != sys.m:
        raise ShapeError(f"gamma has {gamma.shape[1]} columns, expected {sys.m}")

    M, D = prediction_matrices(sys, Np)
    Qbar = np.kron(np.eye(Np), weights.Q)
    Rbar = np.kron(np.eye(Np), weights.R)
    H = D.T @ Qbar @ D + Rbar
    H = 0.5 * (H + H.T)
    err = M @ x - W
    f = D.T @ Qbar @ err
    Theta = np.kron(np.eye(Np), gamma)
    return LocalQP(H, f, Theta, const=float(err @ Qbar @ err))


def solve_local(qp: LocalQP, theta) -> LocalSolution:
    """Solve the local problem for a given allocation through its KKT system.

    [[H, Theta^T], [Theta, 0]] [U; lam] = [-f; theta]
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    c, cu = qp.Theta.shape
    if theta.shape[0] != c:
        raise ShapeError(f"allocation has length {theta.shape[0]}, expected {c}")
    K = np.zeros((cu + c, cu + c))
    K[:cu, :cu] = qp.H
    K[:cu, cu:] = qp.Theta.T
    K[cu:, :cu] = qp.Theta
    rhs = np.concatenate([-qp.f, theta])
    try:
        sol = sla.solve(K, rhs, assume_a="sym", check_finite=False)
    except sla.LinAlgError as exc:
        raise SolverError("singular KKT matrix") from exc
    U, lam = sol[:cu], sol[cu:]
    return LocalSolution(U, lam, qp.objective(U))


def sensitivity(qp: LocalQP) -> Sensitivity:
    """Affine dual map: P = (Theta H^-1 Theta^T)^-1, s = P Theta H^-1 f."""
    chol = sla.cho_factor(qp.H)
    HiTt = sla.cho_solve(chol, qp.Theta.T)
    S = qp.Theta @ HiTt
    try:
        P = np.linalg.inv(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:
        raise SolverError("Theta H^-1 Theta^T is singular") from exc
    P = 0.5 * (P + P.T)
    s = P @ (qp.Theta @ sla.cho_solve(chol, qp.f))
    return Sensitivity(P, s)
