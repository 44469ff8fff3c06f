"""Closed-loop receding-horizon runs of the room scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..agent import Agent, AttackSpec
from ..coordinator import NegotiationConfig, centralized_oracle, equal_split, negotiate
from ..lti import build_3r2c, zoh_discretize
from ..mpc_qp import MpcWeights, sensitivity
from ..secure import NominalRecord, detect_agents, identify_agents, negotiation_phase
from .config import ScenarioConfig, stacked_reference


@dataclass
class StepRecord:
    k: int
    x: np.ndarray          # (M, n) state when u(k) is applied
    y: np.ndarray          # (M,)
    u: np.ndarray          # (M, m)
    x_next: np.ndarray     # (M, n)
    theta: np.ndarray      # (M, c)
    lam: np.ndarray        # (M, c)
    E: np.ndarray          # (M,)
    d: np.ndarray          # (M,)
    iterations: int
    converged: bool
    diverged: bool
    stage_cost: np.ndarray  # (M,)


@dataclass
class SimTrace:
    mode: str
    agent_names: tuple
    steps: list = field(default_factory=list)

    @property
    def any_diverged(self) -> bool:
        return any(s.diverged for s in self.steps)

    def series(self, attr: str) -> np.ndarray:
        return np.array([getattr(s, attr) for s in self.steps])


@dataclass
class CostReport:
    agent_names: tuple
    J: np.ndarray
    J_G: float


def build_agents(cfg: ScenarioConfig, mode: Optional[str] = None) -> list:
    """Room agents at their initial state; attacks are installed unless nominal."""
    mode = mode or cfg.mode
    agents = []
    for a in cfg.agents:
        sys_d = zoh_discretize(build_3r2c(a.room), cfg.Ts)
        weights = MpcWeights(np.diag(a.q), np.array([[a.r]]), cfg.Np)
        attack = None
        if mode != "nominal" and a.attack_scale is not None:
            attack = AttackSpec.scaled(a.attack_scale, cfg.Np, a.attack_start, a.attack_end)
        agents.append(Agent(sys_d, weights, np.eye(1), np.array(a.x0, dtype=float),
                            stacked_reference(a, cfg.Np), attack, a.name))
    return agents


def negotiation_config(cfg: ScenarioConfig, agents) -> NegotiationConfig:
    u_max_seq = np.full(cfg.Np, cfg.u_max)
    neg = NegotiationConfig(u_max_seq, cfg.rho, cfg.eps, cfg.max_iters)
    if neg.rho is None:
        # H does not depend on the state, so the k = 0 sensitivities are the nominal ones
        Ps = [sensitivity(a.condense(0)).P for a in agents]
        neg = neg.resolved(Ps)
    return neg


def stage_cost(agent_cfg, x_next, u) -> float:
    err = np.asarray(agent_cfg.reference) - x_next
    return float(err @ np.diag(agent_cfg.q) @ err + agent_cfg.r * float(u @ u))


def run_scenario(cfg: ScenarioConfig, mode: Optional[str] = None,
                 seed: Optional[int] = None) -> SimTrace:
    """Simulate ``cfg.steps`` closed-loop steps.

    Every step starts with the probe phase so that E_i(k) is logged in all
    modes; reconstructed prices replace flagged agents' answers only in
    ``secured`` mode. A diverged negotiation falls back to the equal split.
    """
    mode = mode or cfg.mode
    seed = cfg.seed if seed is None else seed
    agents = build_agents(cfg, mode)
    neg_cfg = negotiation_config(cfg, agents)
    u_max_seq = neg_cfg.u_max_seq
    rng = np.random.default_rng(seed)
    M, c = len(agents), cfg.Np

    nominal = None
    if cfg.nominal_source == "model":
        nominal = NominalRecord.from_qps([a.condense(0) for a in agents])

    trace = SimTrace(mode, tuple(a.name for a in agents))
    for k in range(cfg.steps):
        for a in agents:
            a.condense(k)
        responders = [a.responder(k) for a in agents]
        theta0 = equal_split(M, u_max_seq)

        idents = identify_agents(responders, c, rng, cfg.estimator, u_max_seq)
        if nominal is None:
            nominal = NominalRecord(tuple(i.P_hat for i in idents))
        detections = detect_agents(idents, nominal, cfg.estimator.eps_P)

        if mode == "secured":
            result = negotiation_phase(responders, idents, detections, nominal, neg_cfg, theta0)
        else:
            result = negotiate(responders, theta0, neg_cfg)
        theta = theta0 if result.diverged else result.theta

        x = np.array([a.x for a in agents])
        u, x_next, costs = [], [], []
        for a, acfg, th in zip(agents, cfg.agents, theta):
            sol = a.solve(k, th)
            ui = a.commit_input(sol.U)
            u.append(ui)
            x_next.append(a.x.copy())
            costs.append(stage_cost(acfg, a.x, ui))
        trace.steps.append(StepRecord(
            k=k, x=x, y=np.array([float(a.sys.C[0] @ xi) for a, xi in zip(agents, x)]),
            u=np.array(u), x_next=np.array(x_next), theta=np.array(theta),
            lam=np.array(result.lam), E=np.array([dt.E for dt in detections]),
            d=np.array([dt.d for dt in detections]), iterations=result.iterations,
            converged=result.converged, diverged=result.diverged,
            stage_cost=np.array(costs)))
    return trace


def accumulate_costs(trace: SimTrace, cfg: ScenarioConfig) -> CostReport:
    """Realized closed-loop costs: sum_k |w_i - x_i(k+1)|^2_Q + |u_i(k)|^2_R."""
    J = np.zeros(len(cfg.agents))
    for s in trace.steps:
        for i, acfg in enumerate(cfg.agents):
            J[i] += stage_cost(acfg, s.x_next[i], s.u[i])
    return CostReport(trace.agent_names, J, float(J.sum()))


def run_oracle(cfg: ScenarioConfig):
    """Closed loop driven by the centralized solution; yields one row per step.

    Each row is ``(k, theta_star, lambda_star, J_star)``.
    """
    agents = build_agents(cfg, "nominal")
    u_max_seq = np.full(cfg.Np, cfg.u_max)
    for k in range(cfg.steps):
        qps = [a.condense(k) for a in agents]
        theta, lam, J = centralized_oracle(qps, u_max_seq)
        for a, th in zip(agents, theta):
            a.commit_input(a.solve(k, th).U)
        yield k, theta, lam, J
