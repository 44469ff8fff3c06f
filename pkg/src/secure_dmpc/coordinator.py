"""Resource-allocation negotiation by projected subgradient steps.

Allocations are kept as an ``(M, c)`` array: one row per agent, one column
per resource sample along the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .agent import Responder
from .errors import DivergenceError, InvalidParameterError, SolverError
from .mpc_qp import LocalQP, sensitivity, solve_local

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class NegotiationConfig:
    """Step size ``rho`` (None = pick with :func:`auto_rho`), stop tolerance
    ``eps`` on the l2 norm of the allocation change, and iteration cap."""

    u_max_seq: np.ndarray
    rho: Optional[float] = None
    eps: float = 1e-6
    max_iters: int = 10_000

    def __post_init__(self):
        u = np.array(self.u_max_seq, dtype=float).reshape(-1)
        u.setflags(write=False)
        object.__setattr__(self, "u_max_seq", u)
        if self.rho is not None and not self.rho > 0:
            raise InvalidParameterError(f"rho must be positive, got {self.rho}")
        if not self.eps > 0:
            raise InvalidParameterError(f"eps must be positive, got {self.eps}")
        if self.max_iters < 1:
            raise InvalidParameterError(f"max_iters must be >= 1, got {self.max_iters}")

    def resolved(self, Ps) -> "NegotiationConfig":
        """Copy with ``rho`` filled in from nominal sensitivities if missing."""
        if self.rho is not None:
            return self
        return NegotiationConfig(self.u_max_seq, auto_rho(Ps), self.eps, self.max_iters)


@dataclass
class NegotiationResult:
    theta: np.ndarray
    lam: np.ndarray
    iterations: int
    converged: bool
    diverged: bool = False
    residuals: list = field(default_factory=list)


def auto_rho(Ps) -> float:
    """0.9 / max_i lambda_max(P_i): keeps the nominal iteration contractive."""
    return 0.9 / max(np.linalg.eigvalsh(np.atleast_2d(P)).max() for P in Ps)


def project_feasible(theta, u_max_seq) -> np.ndarray:
    """Euclidean projection onto {theta : sum_i theta_i = u_max_seq}."""
    theta = np.asarray(theta, dtype=float)
    excess = theta.sum(axis=0) - np.asarray(u_max_seq, dtype=float)
    return theta - excess / theta.shape[0]


def equal_split(M: int, u_max_seq) -> np.ndarray:
    u = np.asarray(u_max_seq, dtype=float).reshape(-1)
    return np.tile(u / M, (M, 1))


def update_allocations(theta, lam, rho: float) -> np.ndarray:
    """theta_i <- theta_i + rho (lam_i - mean_j lam_j)."""
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise DivergenceError("non-finite dual prices")
    return np.asarray(theta, dtype=float) + rho * (lam - lam.mean(axis=0))


def negotiate(responders: Sequence[Responder], theta0, cfg: NegotiationConfig,
              map_fn: Callable = map) -> NegotiationResult:
    """Iterate query/update rounds until the allocation settles.

    ``map_fn`` dispatches the per-agent queries of one round (e.g. an
    executor's ``map``); results are consumed in agent order.
    Non-convergence is reported in the result, not raised.
    """
    if cfg.rho is None:
        raise InvalidParameterError("rho must be resolved before negotiating")
    u_max = cfg.u_max_seq
    theta = np.asarray(theta0, dtype=float)
    if not np.allclose(theta.sum(axis=0), u_max, rtol=0, atol=1e-12 * max(1.0, np.abs(u_max).max())):
        theta = project_feasible(theta, u_max)
    bound = DIVERGENCE_FACTOR * max(np.linalg.norm(u_max), 1.0)

    def query(th):
        return np.array(list(map_fn(lambda r, t: np.asarray(r(t), dtype=float).reshape(-1),
                                    responders, list(th))))

    lam = query(theta)
    residuals = []
    for p in range(1, cfg.max_iters + 1):
        try:
            new = update_allocations(theta, lam, cfg.rho)
        except DivergenceError:
            return NegotiationResult(theta, lam, p - 1, False, True, residuals)
        res = float(np.linalg.norm(new - theta))
        residuals.append(res)
        theta = new
        if not np.isfinite(res) or np.linalg.norm(theta) > bound:
            return NegotiationResult(theta, lam, p, False, True, residuals)
        lam = query(theta)
        if res <= cfg.eps:
            return NegotiationResult(theta, lam, p, True, False, residuals)
    return NegotiationResult(theta, lam, cfg.max_iters, False, False, residuals)


def centralized_oracle(qps: Sequence[LocalQP], u_max_seq):
    """Joint optimum by aggregating the affine dual maps.

    Returns ``(theta_star, lambda_star, J_star)`` with J_star the sum of
    local QP objectives.
    """
    u_max = np.asarray(u_max_seq, dtype=float).reshape(-1)
    Sinv, g = [], []
    for qp in qps:
        sens = sensitivity(qp)
        S = np.linalg.inv(sens.P)
        Sinv.append(S)
        g.append(S @ sens.s)
    total = sum(Sinv)
    try:
        lam = -np.linalg.solve(total, u_max + sum(g))
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular aggregate dual map") from exc
    theta = np.array([-S @ lam - gi for S, gi in zip(Sinv, g)])
    # absorb rounding so the coupling constraint holds to machine precision
    theta = project_feasible(theta, u_max)
    J = sum(solve_local(qp, th).cost for qp, th in zip(qps, theta))
    return theta, lam, float(J)


def iteration_matrix(Ps, rho: float) -> np.ndarray:
    """G = I - rho (I - Avg) blockdiag(P_1, ..., P_M)."""
    Ps = [np.atleast_2d(np.asarray(P, dtype=float)) for P in Ps]
    M, c = len(Ps), Ps[0].shape[0]
    D = np.zeros((M * c, M * c))
    for i, P in enumerate(Ps):
        D[i * c:(i + 1) * c, i * c:(i + 1) * c] = P
    avg = np.kron(np.full((M, M), 1.0 / M), np.eye(c))
    return np.eye(M * c) - rho * (np.eye(M * c) - avg) @ D


def iteration_spectral_radius(Ps, rho: float) -> float:
    """Spectral radius of the allocation iteration on the feasible directions.

    Values below one mean the negotiation converges geometrically.
    """
    Ps = [np.atleast_2d(np.asarray(P, dtype=float)) for P in Ps]
    M, c = len(Ps), Ps[0].shape[0]
    if M == 1:
        return 0.0
    G = iteration_matrix(Ps, rho)
    V = null_space(np.kron(np.ones((1, M)), np.eye(c)))
    return float(np.max(np.abs(np.linalg.eigvals(V.T @ G @ V))))
