"""Linear time-invariant models and the 3R-2C room thermal model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import InvalidParameterError, ShapeError

SECONDS_PER_HOUR = 3600.0


def _as_matrix(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    return a


def _check_dims(A, B, C):
    n = A.shape[0]
    if A.shape != (n, n):
        raise ShapeError(f"A must be square, got {A.shape}")
    if B.shape[0] != n:
        raise ShapeError(f"B has {B.shape[0]} rows, expected {n}")
    if C.shape[1] != n:
        raise ShapeError(f"C has {C.shape[1]} columns, expected {n}")


@dataclass(frozen=True)
class ContinuousLTI:
    """dx/dt = A_c x + B_c u,  y = C_c x  (time in seconds)."""

    A_c: np.ndarray
    B_c: np.ndarray
    C_c: np.ndarray

    def __post_init__(self):
        A, B, C = (_as_matrix(self.A_c, "A_c"), _as_matrix(self.B_c, "B_c"),
                   _as_matrix(self.C_c, "C_c"))
        _check_dims(A, B, C)
        for name, val in (("A_c", A), ("B_c", B), ("C_c", C)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)


@dataclass(frozen=True)
class DiscreteLTI:
    """x(k+1) = A x(k) + B u(k),  y = C x,  sampled every ``Ts`` hours."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Ts: float

    def __post_init__(self):
        A, B, C = (_as_matrix(self.A, "A"), _as_matrix(self.B, "B"),
                   _as_matrix(self.C, "C"))
        _check_dims(A, B, C)
        if not self.Ts > 0:
            raise InvalidParameterError(f"Ts must be positive, got {self.Ts}")
        for name, val in (("A", A), ("B", B), ("C", C)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def output(self, x):
        return self.C @ np.asarray(x, dtype=float)


@dataclass(frozen=True)
class RoomParams:
    """Lumped thermal parameters of one room (SI units).

    C_res, Cs : heat capacity of inside air / external walls [J/K]
    Rf : resistance inside air to outside air (windows) [K/W]
    Ri : resistance inside air to inside walls [K/W]
    Ro : resistance outside air to outside walls [K/W]
    """

    C_res: float
    Cs: float
    Rf: float
    Ri: float
    Ro: float

    def __post_init__(self):
        for name in ("C_res", "Cs", "Rf", "Ri", "Ro"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise InvalidParameterError(f"{name} must be positive, got {val}")


def build_3r2c(params: RoomParams) -> ContinuousLTI:
    """Two-state room model, states ordered [air temperature; wall temperature].

    The input gain is ``10 / C_res`` with the input in watts; the factor 10
    is kept as published.
    """
    p = params
    A_c = np.array([
        [-1.0 / (p.C_res * p.Rf) - 1.0 / (p.C_res * p.Ri), 1.0 / (p.C_res * p.Ri)],
        [1.0 / (p.Cs * p.Ri), -1.0 / (p.Cs * p.Ro) - 1.0 / (p.Cs * p.Ri)],
    ])
    B_c = np.array([[10.0 / p.C_res], [0.0]])
    C_c = np.array([[1.0, 0.0]])
    return ContinuousLTI(A_c, B_c, C_c)


def zoh_discretize(sys: ContinuousLTI, Ts: float) -> DiscreteLTI:
    """Zero-order-hold discretization; ``Ts`` in hours.

    Uses the exponential of the augmented matrix [[A_c, B_c], [0, 0]] over
    the sampling period in seconds, whose top blocks are (A, B).
    """
    if not Ts > 0:
        raise InvalidParameterError(f"Ts must be positive, got {Ts}")
    n, m = sys.B_c.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = sys.A_c
    aug[:n, n:] = sys.B_c
    phi = expm(aug * (Ts * SECONDS_PER_HOUR))
    return DiscreteLTI(phi[:n, :n], phi[:n, n:], sys.C_c, Ts)


def step(sys: DiscreteLTI, x, u) -> np.ndarray:
    """One sample of x(k+1) = A x(k) + B u(k)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.shape[0] != sys.n:
        raise ShapeError(f"state has length {x.shape[0]}, expected {sys.n}")
    if u.shape[0] != sys.m:
        raise ShapeError(f"input has length {u.shape[0]}, expected {sys.m}")
    return sys.A @ x + sys.B @ u
