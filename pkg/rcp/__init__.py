"""rcplab: stability, convergence and bifurcation analysis of the RCP fluid model.

Public API:
    from rcp import ProtocolParams, simulate, rightmost_roots, hopf_report, run_packet_sim
"""
__version__ = "1.0.0"

from rcp.convergence import classify_regime, decay_rate_no_queue, decay_rate_with_queue, non_oscillatory
from rcp.entities import (
    Equilibrium,
    HopfReport,
    InitialCondition,
    PacketSimConfig,
    PacketTrace,
    ProtocolParams,
    SimConfig,
    Spectrum,
    Trajectory,
)
from rcp.errors import ConfigError, ConvergenceError, DomainError, Inconclusive, InternalError, RcpError
from rcp.fluid import analyze_trajectory, fit_decay_rate, phase_portrait, simulate
from rcp.hopf import alpha_prime, amplitude_no_queue, hopf_report, lyapunov_c1, omega0_at_hopf, theta_threshold
from rcp.model import equilibrium, validate_params
from rcp.packet import queue_stats, run_packet_sim
from rcp.stability import (
    hopf_kappa_c,
    is_locally_stable,
    lambert_w_roots,
    rightmost_roots,
    stability_boundary_beta,
    theta,
    transversality_sign,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "Equilibrium",
    "HopfReport",
    "Inconclusive",
    "InitialCondition",
    "InternalError",
    "PacketSimConfig",
    "PacketTrace",
    "ProtocolParams",
    "RcpError",
    "SimConfig",
    "Spectrum",
    "Trajectory",
    "alpha_prime",
    "amplitude_no_queue",
    "analyze_trajectory",
    "classify_regime",
    "decay_rate_no_queue",
    "decay_rate_with_queue",
    "equilibrium",
    "fit_decay_rate",
    "hopf_kappa_c",
    "hopf_report",
    "is_locally_stable",
    "lambert_w_roots",
    "lyapunov_c1",
    "non_oscillatory",
    "omega0_at_hopf",
    "phase_portrait",
    "queue_stats",
    "rightmost_roots",
    "run_packet_sim",
    "simulate",
    "stability_boundary_beta",
    "theta",
    "theta_threshold",
    "transversality_sign",
    "validate_params",
]
