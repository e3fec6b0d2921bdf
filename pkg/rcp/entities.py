"""Core dataclasses for the RCP fluid, spectral, Hopf and packet models."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import DEFAULT_KAPPA, DEFAULT_STEPS_PER_DELAY

NON_OSCILLATORY = "non_oscillatory_stable"
OSCILLATORY = "oscillatory_stable"
UNSTABLE = "unstable"

SUB_CRITICAL = "sub_critical"
SUPER_CRITICAL = "super_critical"

CONVERGED = "converged"
SUSTAINED_OSCILLATION = "sustained_oscillation"
DIVERGED = "diverged"


@dataclass(frozen=True)
class ProtocolParams:
    """One RCP configuration: gains ``a`` and ``beta``, capacity, RTT and kappa.

    ``beta == 0`` selects the rate-mismatch-only model.
    """

    a: float
    beta: float
    C: float
    tau: float
    kappa: float = DEFAULT_KAPPA

    def with_kappa(self, kappa: float) -> "ProtocolParams":
        return replace(self, kappa=kappa)


@dataclass(frozen=True)
class Equilibrium:
    R_star: float
    q_star: float


@dataclass(frozen=True)
class InitialCondition:
    """Constant rate history on [-tau, 0] and the queue at t = 0."""

    R0: float
    q0: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    """Integrator settings for the method-of-steps solver.

    ``blowup_cap`` of ``None`` means ``BLOWUP_CAP_REL * C``.
    """

    horizon: float
    steps_per_delay: int = DEFAULT_STEPS_PER_DELAY
    clamp_queue: bool = False
    blowup_cap: Optional[float] = None


@dataclass
class Trajectory:
    """Uniformly sampled solution of the delayed fluid model."""

    times: np.ndarray
    R_values: np.ndarray
    q_values: np.ndarray
    step: float
    tau: float
    diverged: bool = False
    divergence_time: Optional[float] = None

    @property
    def steps_per_delay(self) -> int:
        return int(round(self.tau / self.step))

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class TrajectoryVerdict:
    kind: str
    amplitude: float = 0.0
    max_deviation: float = 0.0


@dataclass
class Spectrum:
    """Characteristic roots sorted by decreasing real part."""

    roots: List[complex]
    residuals: List[float]
    method: str
    nodes: int = 0
    dropped_seeds: List[complex] = field(default_factory=list)

    @property
    def rightmost(self) -> complex:
        return self.roots[0]

    @property
    def max_real(self) -> float:
        return self.roots[0].real

    def __len__(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class ThetaValue:
    theta: float
    a: float
    beta: float


@dataclass(frozen=True)
class ConvergenceReport:
    sigma: float
    binding_branch: str
    regime: str


@dataclass(frozen=True)
class HopfIntermediates:
    """Raw center-manifold quantities kept for diagnosis."""

    Omega: complex
    q02: complex
    q_star02: complex
    g20: complex
    g11: complex
    g02: complex
    g21: complex
    e: Tuple[complex, complex]
    f: Tuple[complex, complex]
    A1: complex
    A2: complex
    w20_at_zero: Tuple[complex, complex]
    w20_at_minus_tau: complex


@dataclass(frozen=True)
class HopfReport:
    omega0: float
    Theta: float
    kappa_c: float
    c1: complex
    alpha_prime: float
    mu2: float
    beta2: float
    classification: str
    intermediates: HopfIntermediates

    def as_lines(self) -> List[str]:
        lines = [
            f"omega0={self.omega0!r}",
            f"Theta={self.Theta!r}",
            f"kappa_c={self.kappa_c!r}",
            f"c1_re={self.c1.real!r}",
            f"c1_im={self.c1.imag!r}",
            f"alpha_prime={self.alpha_prime!r}",
            f"mu2={self.mu2!r}",
            f"beta2={self.beta2!r}",
            f"classification={self.classification}",
        ]
        for name, value in asdict(self.intermediates).items():
            lines.append(f"{name}={value!r}")
        return lines


@dataclass(frozen=True)
class PacketSimConfig:
    """Packet-level scenario; ``None`` fields take defaults at validation time."""

    num_flows: int
    C: float
    tau: float
    a: float
    beta: float
    update_interval: Optional[float] = None
    slot: Optional[float] = None
    horizon: Optional[float] = None
    initial_rate: Optional[float] = None
    max_queue: Optional[float] = None
    clamp_queue: bool = False


@dataclass
class PacketTrace:
    times: np.ndarray
    queue_lengths: np.ndarray
    fair_rates: np.ndarray
    utilization: np.ndarray
    event_log: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class QueueStats:
    mean: float
    amplitude: float
    oscillating: bool


@dataclass
class RunManifest:
    subcommand: str
    parameters: Dict[str, object]
    outputs: List[str]
    version: str
    duration_s: float = 0.0
    exit_code: int = 0

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)
