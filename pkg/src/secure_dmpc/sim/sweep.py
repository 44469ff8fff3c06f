"""Cost and convergence of one negotiation as one agent scales its prices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..agent import qp_responder
from ..coordinator import equal_split, iteration_spectral_radius, negotiate
from ..mpc_qp import sensitivity, solve_local
from .config import ScenarioConfig
from .runner import build_agents, negotiation_config


@dataclass
class SweepReport:
    agent_names: tuple
    attacker: int
    tau: np.ndarray
    J: np.ndarray          # (len(tau), M); nan where the negotiation diverged
    J_G: np.ndarray
    converged: np.ndarray
    diverged: np.ndarray
    iterations: np.ndarray
    radius: np.ndarray

    def divergence_region(self) -> np.ndarray:
        """tau values where the negotiation failed to converge."""
        return self.tau[~self.converged]


def tau_sweep(cfg: ScenarioConfig, tau_grid, attacker: int = 0, k: int = 0) -> SweepReport:
    """Negotiate at the initial state with T = tau I on ``attacker`` for each tau.

    Costs are the horizon tracking costs of the truthful local solutions at
    the negotiated allocation.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    if np.any(tau_grid <= 0):
        raise ValueError("tau values must be positive")
    agents = build_agents(cfg, "nominal")
    neg_cfg = negotiation_config(cfg, agents)
    qps = [a.condense(k) for a in agents]
    Ps = [sensitivity(qp).P for qp in qps]
    M, c = len(qps), qps[0].c
    theta0 = equal_split(M, neg_cfg.u_max_seq)

    J = np.full((tau_grid.size, M), np.nan)
    conv = np.zeros(tau_grid.size, dtype=bool)
    div = np.zeros(tau_grid.size, dtype=bool)
    iters = np.zeros(tau_grid.size, dtype=int)
    radius = np.zeros(tau_grid.size)
    for t, tau in enumerate(tau_grid):
        T = tau * np.eye(c)
        responders = [qp_responder(qp, T if i == attacker else None) for i, qp in enumerate(qps)]
        result = negotiate(responders, theta0, neg_cfg)
        eff = [T @ P if i == attacker else P for i, P in enumerate(Ps)]
        radius[t] = iteration_spectral_radius(eff, neg_cfg.rho)
        conv[t], div[t], iters[t] = result.converged, result.diverged, result.iterations
        if result.converged:
            J[t] = [qp.tracking_cost(solve_local(qp, th).U) for qp, th in zip(qps, result.theta)]
    return SweepReport(tuple(a.name for a in agents), attacker, tau_grid, J, J.sum(axis=1),
                       conv, div, iters, radius)
