"""Resource-allocation distributed MPC with selfish-agent detection and correction."""

from .agent import Agent, AttackSpec, qp_responder
from .coordinator import (NegotiationConfig, NegotiationResult, auto_rho, centralized_oracle,
                          iteration_spectral_radius, negotiate, project_feasible,
                          update_allocations)
from .lti import ContinuousLTI, DiscreteLTI, RoomParams, build_3r2c, step, zoh_discretize
from .mpc_qp import (LocalQP, LocalSolution, MpcWeights, Sensitivity, condense,
                     prediction_matrices, sensitivity, solve_local)
from .secure import (DetectionResult, EstimatorState, NominalRecord, SecureConfig, detect,
                     estimate_T_inverse, estimation_converged, probe_allocation,
                     reconstruct_lambda, rls_init, rls_update, secure_step)

__version__ = "0.1.0"
