"""Local MPC agents, optionally lying about their dual prices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError, ShapeError
from .lti import DiscreteLTI, step
from .mpc_qp import LocalQP, LocalSolution, MpcWeights, condense, solve_local

Responder = Callable[[np.ndarray], np.ndarray]

MAX_ATTACK_COND = 1e12


@dataclass(frozen=True)
class AttackSpec:
    """Linear corruption lam -> T lam, active for start_step <= k <= end_step."""

    T: np.ndarray
    start_step: int = 0
    end_step: Optional[int] = None

    def __post_init__(self):
        T = np.array(np.atleast_2d(self.T), dtype=float)
        if T.shape[0] != T.shape[1]:
            raise ShapeError(f"T must be square, got {T.shape}")
        if not np.all(np.isfinite(T)) or np.linalg.cond(T) > MAX_ATTACK_COND:
            raise InvalidParameterError("attack map T must be invertible")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)

    @classmethod
    def scaled(cls, tau: float, c: int, start_step: int = 0, end_step: Optional[int] = None):
        """T = tau * I."""
        return cls(tau * np.eye(c), start_step, end_step)

    def active(self, k: int) -> bool:
        return k >= self.start_step and (self.end_step is None or k <= self.end_step)


def qp_responder(qp: LocalQP, T=None) -> Responder:
    """Dual-price oracle of a fixed QP, corrupted by ``T`` when given."""
    if T is None:
        return lambda theta: solve_local(qp, theta).lam
    T = np.atleast_2d(np.asarray(T, dtype=float))
    return lambda theta: T @ solve_local(qp, theta).lam


@dataclass
class Agent:
    """A room controller: plant model, MPC weights, state and reference.

    The harness calls :meth:`condense` once per time step, lets the
    coordinator query :meth:`respond`, then applies the agreed sequence
    with :meth:`commit_input`.
    """

    sys: DiscreteLTI
    weights: MpcWeights
    gamma: np.ndarray
    x: np.ndarray
    W: np.ndarray
    attack: Optional[AttackSpec] = None
    name: str = ""
    qp: Optional[LocalQP] = field(default=None, init=False, repr=False)
    k: Optional[int] = field(default=None, init=False)

    def __post_init__(self):
        self.gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.W = np.asarray(self.W, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.x)):
            raise InvalidParameterError("state must be finite")
        if self.W.shape[0] != self.weights.Np * self.sys.n:
            raise ShapeError(
                f"reference has length {self.W.shape[0]}, expected {self.weights.Np * self.sys.n}")

    @property
    def c(self) -> int:
        return self.weights.Np * self.gamma.shape[0]

    def condense(self, k: int) -> LocalQP:
        self.qp = condense(self.sys, self.weights, self.gamma, self.x, self.W)
        self.k = k
        return self.qp

    def _require(self, k):
        if self.qp is None or self.k != k:
            raise RuntimeError(f"agent {self.name!r} has not been condensed for step {k}")

    def solve(self, k: int, theta) -> LocalSolution:
        """Truthful local solution."""
        self._require(k)
        return solve_local(self.qp, theta)

    def respond(self, k: int, theta) -> np.ndarray:
        """Dual price sent to the coordinator for allocation ``theta``."""
        lam = self.solve(k, theta).lam
        if self.attack is not None and self.attack.active(k):
            return self.attack.T @ lam
        return lam

    def responder(self, k: int) -> Responder:
        self._require(k)
        return lambda theta: self.respond(k, theta)

    def commit_input(self, U_final) -> np.ndarray:
        """Apply the first input of ``U_final`` and advance the plant."""
        U_final = np.asarray(U_final, dtype=float).reshape(-1)
        m = self.sys.m
        if U_final.shape[0] != self.weights.Np * m:
            raise ShapeError(
                f"input sequence has length {U_final.shape[0]}, expected {self.weights.Np * m}")
        u = U_final[:m].copy()
        self.x = step(self.sys, self.x, u)
        self.qp = None
        self.k = None
        return u
