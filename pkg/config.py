"""Centralised configuration constants for rcplab."""
from __future__ import annotations

import math
from pathlib import Path

# ---------------------------------------------------------------------------
# File paths
# ---------------------------------------------------------------------------
SCENARIOS_FILE: Path = Path("data/scenarios.json")
MANIFEST_NAME: str = "manifest.json"

# ---------------------------------------------------------------------------
# Logging / CLI
# ---------------------------------------------------------------------------
LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"
WORKERS_ENV_VAR: str = "RCPLAB_WORKERS"

# ---------------------------------------------------------------------------
# Protocol defaults
# ---------------------------------------------------------------------------
DEFAULT_KAPPA: float = 1.0
INV_E: float = math.exp(-1.0)
HALF_PI: float = 0.5 * math.pi

# ---------------------------------------------------------------------------
# Fluid simulator
# ---------------------------------------------------------------------------
DEFAULT_STEPS_PER_DELAY: int = 32
MIN_STEPS_PER_DELAY: int = 4
BLOWUP_CAP_REL: float = 1e6          # divergence when |R| exceeds this multiple of C
TOL_CONV_REL: float = 1e-4           # converged when max|R - R*| on the tail is below this times C
STATIONARITY_TOL: float = 0.05       # half-tail amplitude agreement for a limit cycle
DEFAULT_TAIL_FRACTION: float = 0.5
FIT_WINDOW_UPPER_REL: float = 1e-6
FIT_WINDOW_LOWER_REL: float = 1e-13

# ---------------------------------------------------------------------------
# Spectral root finder
# ---------------------------------------------------------------------------
SPECTRAL_NODES: int = 64
SPECTRAL_MAX_NODES: int = 512
ROOT_STABILITY_TOL: float = 1e-8     # leading roots must agree this well between node doublings
NEWTON_RESIDUAL_TOL: float = 1e-10
NEWTON_MAX_ITER: int = 60
NEWTON_STEP_TOL: float = 1e-14
REAL_ROOT_TOL: float = 1e-8          # |Im| below this (relative) is snapped to the real axis
DEDUP_TOL: float = 1e-7

# ---------------------------------------------------------------------------
# Hopf analysis
# ---------------------------------------------------------------------------
HOPF_SURFACE_TOL: float = 1e-6
PATH_AGREEMENT_TOL: float = 1e-8
G11_TOL: float = 1e-12
THETA_H_BRACKET: tuple[float, float] = (0.5, HALF_PI)

# ---------------------------------------------------------------------------
# Convergence root solves
# ---------------------------------------------------------------------------
BISECTION_RTOL: float = 1e-12
U_FLOOR: float = 1e-9                # lower end of the u bracket for g(u) = a

# ---------------------------------------------------------------------------
# Packet simulator
# ---------------------------------------------------------------------------
PACKET_RATE_CAP_REL: float = 100.0
PACKET_RATE_FLOOR_REL: float = 1e-6
PACKET_SLOT_FRACTION: float = 0.01   # default slot = tau * this
PACKET_INITIAL_RATE_REL: float = 0.9 # default per-flow rate = this * C / num_flows
PACKET_STATIONARITY_TOL: float = 0.10
PACKET_OSCILLATION_REL: float = 0.05 # amplitude above this times (mean + 1) counts as oscillating
PACKET_EVENT_LOG_LIMIT: int = 50
PACKET_DEFAULT_HORIZON_RTTS: float = 300.0
PACKET_MIN_HORIZON_RTTS: float = 10.0
PACKET_MAX_SLOT_FRACTION: float = 0.1
