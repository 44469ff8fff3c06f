"""Supervised negotiation: identify each agent's dual map, flag deviations,
and replace flagged agents' answers with reconstructed truthful prices.

Each agent's reported prices are modeled as ``lam = -P theta - s`` with a
symmetric ``P``. The coordinator fits ``(P, s)`` by recursive least squares
on random probe allocations, compares ``P`` with a trusted nominal value,
and for flagged agents answers on their behalf with
``-P_bar theta - T_inv s``, where ``T_inv = P_bar P_hat^-1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .agent import Responder
from .coordinator import NegotiationConfig, NegotiationResult, equal_split, negotiate
from .errors import InvalidParameterError, MitigationUnavailableError, ShapeError
from .mpc_qp import LocalQP, sensitivity

MAX_COND = 1e12


def n_params(c: int) -> int:
    """Upper triangle of a c x c matrix plus a length-c offset."""
    return c * (c + 1) // 2 + c


def default_min_probes(c: int) -> int:
    return math.ceil(n_params(c) / c) + 2


def _triu_index(c: int) -> np.ndarray:
    # idx[i, j] = position of entry (min(i, j), max(i, j)) in the row-major upper triangle
    idx = np.zeros((c, c), dtype=int)
    rows, cols = np.triu_indices(c)
    idx[rows, cols] = np.arange(rows.size)
    idx[cols, rows] = np.arange(rows.size)
    return idx


@dataclass(frozen=True)
class EstimatorState:
    eta: np.ndarray
    cov: np.ndarray
    phi: float
    steps: int = 0

    @property
    def c(self) -> int:
        # n_params(c) = c (c + 3) / 2
        return int(round((-3 + math.sqrt(9 + 8 * self.eta.size)) / 2))

    def unpack(self):
        """Return ``(P_hat, s_hat)`` from the packed parameter vector."""
        c = self.c
        ntri = c * (c + 1) // 2
        P = self.eta[:ntri][_triu_index(c)]
        return P, self.eta[ntri:].copy()


def rls_init(c: int, delta: float = 1e12, phi: float = 0.995,
             theta_scale: float = 1.0) -> EstimatorState:
    """Zero estimate with covariance ``delta`` in probe-normalized units.

    The entries of ``P`` multiply allocations of magnitude ``theta_scale``,
    so their prior variance is ``delta / theta_scale**2``; with
    ``theta_scale = 1`` this is the plain ``delta * I``.
    """
    if not delta > 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    if not 0 < phi <= 1:
        raise InvalidParameterError(f"phi must lie in (0, 1], got {phi}")
    if not theta_scale > 0:
        raise InvalidParameterError(f"theta_scale must be positive, got {theta_scale}")
    ntri = c * (c + 1) // 2
    diag = np.full(n_params(c), float(delta))
    diag[:ntri] /= theta_scale ** 2
    return EstimatorState(np.zeros(n_params(c)), np.diag(diag), float(phi), 0)


def rls_update(est: EstimatorState, theta, lambda_obs) -> EstimatorState:
    """Absorb one probe: the c scalar rows of ``lambda_obs`` in turn."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    lam = np.asarray(lambda_obs, dtype=float).reshape(-1)
    c = est.c
    if theta.shape != (c,) or lam.shape != (c,):
        raise ShapeError(f"probe and observation must have length {c}")
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(lam))):
        raise InvalidParameterError("non-finite probe or observation")
    idx = _triu_index(c)
    ntri = c * (c + 1) // 2
    eta = est.eta.copy()
    cov = est.cov.copy()
    for r in range(c):
        reg = np.zeros(eta.size)
        reg[idx[r]] = -theta
        reg[ntri + r] = -1.0
        Pr = cov @ reg
        gain = Pr / (est.phi + reg @ Pr)
        eta = eta + gain * (lam[r] - reg @ eta)
        cov = (cov - np.outer(gain, Pr)) / est.phi
        cov = 0.5 * (cov + cov.T)
    return EstimatorState(eta, cov, est.phi, est.steps + 1)


def probe_allocation(rng: np.random.Generator, c: int, bounds) -> np.ndarray:
    """Independent uniform draws in ``bounds = (low, high)`` (scalars or per-component)."""
    low, high = (np.broadcast_to(np.asarray(b, dtype=float), (c,)) for b in bounds)
    if np.any(high < low):
        raise InvalidParameterError("probe bounds must satisfy low <= high")
    if np.all(high == low):
        warnings.warn("degenerate probe bounds; probe carries no excitation", stacklevel=2)
        return low.copy()
    return rng.uniform(low, high)


def estimation_converged(eta_h, eta_prev, eps_est: float, h: int, min_probes: int) -> bool:
    return h >= min_probes and float(np.linalg.norm(np.asarray(eta_h) - np.asarray(eta_prev))) <= eps_est


@dataclass(frozen=True)
class DetectionResult:
    E: float
    d: int
    reason: str  # "clean" | "threshold-exceeded" | "estimation-nonconvergence"


def detect(P_hat, P_bar, eps_P: float, converged: bool = True) -> DetectionResult:
    """Flag an agent whose estimated map left the ``eps_P`` Frobenius ball around nominal."""
    P_hat = np.atleast_2d(np.asarray(P_hat, dtype=float))
    P_bar = np.atleast_2d(np.asarray(P_bar, dtype=float))
    if P_hat.shape != P_bar.shape:
        raise ShapeError(f"shape mismatch {P_hat.shape} vs {P_bar.shape}")
    E = float(np.linalg.norm(P_hat - P_bar, "fro"))
    if not converged:
        return DetectionResult(E, 1, "estimation-nonconvergence")
    if E > eps_P:
        return DetectionResult(E, 1, "threshold-exceeded")
    return DetectionResult(E, 0, "clean")


def estimate_T_inverse(P_bar, P_hat) -> np.ndarray:
    P_hat = np.atleast_2d(np.asarray(P_hat, dtype=float))
    P_bar = np.atleast_2d(np.asarray(P_bar, dtype=float))
    if not np.all(np.isfinite(P_hat)):
        raise MitigationUnavailableError("estimated dual map is not finite")
    sv = np.linalg.svd(P_hat, compute_uv=False)
    # judged against the nominal scale too, so a near-zero scalar estimate is caught
    ref = max(sv.max(), np.linalg.norm(P_bar, 2))
    if sv.min() <= ref / MAX_COND:
        raise MitigationUnavailableError("estimated dual map is numerically singular")
    return np.linalg.solve(P_hat.T, P_bar.T).T


def reconstruct_lambda(P_bar, T_inv_hat, s_tilde_hat, theta) -> np.ndarray:
    """Truthful price recovered from the identified map; ignores live answers."""
    return (-np.atleast_2d(P_bar) @ np.asarray(theta, dtype=float).reshape(-1)
            - np.atleast_2d(T_inv_hat) @ np.asarray(s_tilde_hat, dtype=float).reshape(-1))


@dataclass(frozen=True)
class NominalRecord:
    """Trusted attack-free ``P_bar`` per agent."""

    P_bar: tuple

    def __post_init__(self):
        mats = []
        for P in self.P_bar:
            P = np.array(np.atleast_2d(P), dtype=float)
            if not np.allclose(P, P.T, rtol=1e-8, atol=0) or np.linalg.eigvalsh(0.5 * (P + P.T)).min() <= 0:
                raise InvalidParameterError("nominal P must be symmetric positive definite")
            P.setflags(write=False)
            mats.append(P)
        object.__setattr__(self, "P_bar", tuple(mats))

    @classmethod
    def from_qps(cls, qps: Sequence[LocalQP]) -> "NominalRecord":
        return cls(tuple(sensitivity(qp).P for qp in qps))


@dataclass(frozen=True)
class SecureConfig:
    eps_P: float = 1e-4
    phi: float = 0.995
    delta: float = 1e12
    eps_est: float = 1e-9
    probe_cap: int = 50
    min_probes: Optional[int] = None
    probe_bounds: Optional[tuple] = None

    def __post_init__(self):
        if not self.eps_P > 0:
            raise InvalidParameterError(f"eps_P must be positive, got {self.eps_P}")
        if self.probe_cap < 1:
            raise InvalidParameterError(f"probe_cap must be >= 1, got {self.probe_cap}")


@dataclass
class Identification:
    P_hat: np.ndarray
    s_hat: np.ndarray
    converged: bool
    probes: int
    state: EstimatorState


def identify(responder: Responder, c: int, rng: np.random.Generator,
             cfg: SecureConfig, bounds) -> Identification:
    """Probe one agent with random allocations until its fitted map settles."""
    low, high = (np.asarray(b, dtype=float) for b in bounds)
    scale = float(max(np.max(np.abs(low)), np.max(np.abs(high)), 1e-300))
    est = rls_init(c, cfg.delta, cfg.phi, theta_scale=scale if np.any(high > low) else 1.0)
    min_probes = cfg.min_probes or default_min_probes(c)
    converged = False
    for h in range(1, cfg.probe_cap + 1):
        theta = probe_allocation(rng, c, bounds)
        prev = est.eta
        est = rls_update(est, theta, responder(theta))
        if estimation_converged(est.eta, prev, cfg.eps_est, h, min_probes):
            converged = True
            break
    P_hat, s_hat = est.unpack()
    return Identification(P_hat, s_hat, converged, est.steps, est)


def identify_agents(responders: Sequence[Responder], c: int, rng: np.random.Generator,
                    cfg: SecureConfig, u_max_seq) -> list:
    """Probe phase for every agent, in agent order (one shared generator)."""
    bounds = cfg.probe_bounds
    if bounds is None:
        bounds = (0.0, float(np.max(np.abs(u_max_seq))))
    return [identify(r, c, rng, cfg, bounds) for r in responders]


def detect_agents(idents: Sequence[Identification], nominal: NominalRecord,
                  eps_P: float) -> list:
    return [detect(ident.P_hat, P_bar, eps_P, ident.converged)
            for ident, P_bar in zip(idents, nominal.P_bar)]


def negotiation_phase(responders: Sequence[Responder], idents: Sequence[Identification],
                      detections: Sequence[DetectionResult], nominal: NominalRecord,
                      neg_cfg: NegotiationConfig, theta0=None) -> NegotiationResult:
    """Negotiate with live answers from clean agents and reconstructed ones otherwise.

    A flagged agent whose estimate cannot be inverted keeps its ``theta0``
    share; the remaining agents split the rest.
    """
    M = len(responders)
    u_max = neg_cfg.u_max_seq
    theta0 = equal_split(M, u_max) if theta0 is None else np.asarray(theta0, dtype=float)

    used, frozen = [], []
    for i, (resp, ident, det) in enumerate(zip(responders, idents, detections)):
        if not det.d:
            used.append(resp)
            continue
        try:
            T_inv = estimate_T_inverse(nominal.P_bar[i], ident.P_hat)
        except MitigationUnavailableError:
            frozen.append(i)
            used.append(None)
            continue
        used.append(_reconstructed(nominal.P_bar[i], T_inv, ident.s_hat))

    if not frozen:
        return negotiate(used, theta0, neg_cfg)

    active = [i for i in range(M) if i not in frozen]
    theta = theta0.copy()
    lam = np.array([np.asarray(responders[i](theta0[i]), dtype=float) for i in range(M)])
    if not active:
        return NegotiationResult(theta, lam, 0, True, False, [])
    sub_cfg = NegotiationConfig(u_max - theta0[frozen].sum(axis=0), neg_cfg.rho,
                                neg_cfg.eps, neg_cfg.max_iters)
    sub = negotiate([used[i] for i in active], theta0[active], sub_cfg)
    theta[active] = sub.theta
    lam[active] = sub.lam
    return NegotiationResult(theta, lam, sub.iterations, sub.converged, sub.diverged,
                             sub.residuals)


def _reconstructed(P_bar, T_inv, s_hat) -> Responder:
    return lambda theta: reconstruct_lambda(P_bar, T_inv, s_hat, theta)


def secure_step(responders: Sequence[Responder], nominal: NominalRecord, cfg: SecureConfig,
                neg_cfg: NegotiationConfig, rng: np.random.Generator, theta0=None):
    """Detection phase followed by the supervised negotiation.

    Returns ``(detections, result, identifications)``.
    """
    c = neg_cfg.u_max_seq.size
    idents = identify_agents(responders, c, rng, cfg, neg_cfg.u_max_seq)
    detections = detect_agents(idents, nominal, cfg.eps_P)
    result = negotiation_phase(responders, idents, detections, nominal, neg_cfg, theta0)
    return detections, result, idents
