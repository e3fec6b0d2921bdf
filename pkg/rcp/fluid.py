"""Method-of-steps integration of the delayed RCP fluid model.

    dR/dt = kappa R / (C tau) * (a (C - R(t - tau)) - beta q / tau)
    dq/dt = kappa (R(t - tau) - C)

The step is h = tau / m, so the delay lands on the grid. Classical RK4 needs
the delayed rate at grid points and at interval midpoints; midpoints come from
cubic Hermite interpolation over the stored rate and its derivative. The
history is the constant R0 on [-tau, 0].
"""
from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from config import (
    BLOWUP_CAP_REL,
    DEFAULT_TAIL_FRACTION,
    FIT_WINDOW_LOWER_REL,
    FIT_WINDOW_UPPER_REL,
    MIN_STEPS_PER_DELAY,
    STATIONARITY_TOL,
    TOL_CONV_REL,
)
from rcp.entities import (
    CONVERGED,
    DIVERGED,
    SUSTAINED_OSCILLATION,
    Equilibrium,
    InitialCondition,
    ProtocolParams,
    SimConfig,
    Trajectory,
    TrajectoryVerdict,
)
from rcp.errors import DomainError, Inconclusive, NumericalBlowup
from rcp.model import require_positive, validate_params

logger = logging.getLogger(__name__)


def _validate_run(p: ProtocolParams, ic: InitialCondition, cfg: SimConfig) -> float:
    validate_params(p)
    require_positive("R0", ic.R0)
    if isinstance(ic.q0, bool) or not isinstance(ic.q0, (int, float)) or not math.isfinite(ic.q0):
        raise DomainError("q0", f"must be a finite number, got {ic.q0!r}")
    if cfg.clamp_queue and ic.q0 < 0:
        raise DomainError("q0", "must be >= 0 when the queue is clamped")
    require_positive("horizon", cfg.horizon)
    m = cfg.steps_per_delay
    if isinstance(m, bool) or not isinstance(m, int) or m < MIN_STEPS_PER_DELAY:
        raise DomainError("steps_per_delay", f"must be an integer >= {MIN_STEPS_PER_DELAY}, got {m!r}")
    cap = BLOWUP_CAP_REL * p.C if cfg.blowup_cap is None else cfg.blowup_cap
    if require_positive("blowup_cap", cap) <= p.C:
        raise DomainError("blowup_cap", f"must exceed C={p.C!r}, got {cap!r}")
    return float(cap)


def simulate(p: ProtocolParams, ic: InitialCondition, cfg: SimConfig) -> Trajectory:
    cap = _validate_run(p, ic, cfg)
    a, beta, C, tau, kappa = p.a, p.beta, p.C, p.tau, p.kappa
    m = cfg.steps_per_delay
    h = tau / m
    n_steps = max(1, int(math.ceil(cfg.horizon / h - 1e-9)))
    clamp = cfg.clamp_queue
    gain = kappa / (C * tau)

    def rhs(r: float, q: float, r_delayed: float) -> Tuple[float, float]:
        dr = gain * r * (a * (C - r_delayed) - beta * q / tau)
        dq = kappa * (r_delayed - C)
        if clamp and q <= 0.0:
            dq = max(dq, 0.0)
        return dr, dq

    R = [float(ic.R0)]
    Q = [float(ic.q0)]
    slopes = []  # right derivative of R at each grid point
    diverged = False
    divergence_time: Optional[float] = None

    for n in range(n_steps):
        r, q = R[n], Q[n]
        k = n - m
        if k < 0:
            d_start = d_mid = d_end = ic.R0
        else:
            d_start, d_end = R[k], R[k + 1]
            d_mid = 0.5 * (d_start + d_end) + h * (slopes[k] - slopes[k + 1]) / 8.0

        k1r, k1q = rhs(r, q, d_start)
        slopes.append(k1r)
        k2r, k2q = rhs(r + 0.5 * h * k1r, q + 0.5 * h * k1q, d_mid)
        k3r, k3q = rhs(r + 0.5 * h * k2r, q + 0.5 * h * k2q, d_mid)
        k4r, k4q = rhs(r + h * k3r, q + h * k3q, d_end)
        r_next = r + h * (k1r + 2.0 * k2r + 2.0 * k3r + k4r) / 6.0
        q_next = q + h * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        if clamp:
            q_next = max(q_next, 0.0)

        try:
            _check_step((n + 1) * h, r_next, q_next, cap)
        except NumericalBlowup as exc:
            diverged = True
            divergence_time = exc.time
            logger.warning("trajectory diverged for %s: %s", p, exc)
            break
        R.append(r_next)
        Q.append(q_next)

    times = np.arange(len(R)) * h
    return Trajectory(
        times=times,
        R_values=np.asarray(R),
        q_values=np.asarray(Q),
        step=h,
        tau=tau,
        diverged=diverged,
        divergence_time=divergence_time,
    )


def _check_step(t: float, r: float, q: float, cap: float) -> None:
    if not (math.isfinite(r) and math.isfinite(q)):
        raise NumericalBlowup(t, r)
    if abs(r) > cap:
        raise NumericalBlowup(t, r)


def phase_portrait(traj: Trajectory, tau: float) -> np.ndarray:
    """(R(t), R(t - tau)) pairs on the grid for t >= tau."""
    tau = require_positive("tau", tau)
    if len(traj) == 0 or traj.times[-1] <= tau:
        raise DomainError("horizon", f"trajectory must extend past tau={tau!r}")
    m = int(round(tau / traj.step))
    return np.column_stack((traj.R_values[m:], traj.R_values[:-m]))


def tail_amplitude(values: Sequence[float], tail_fraction: float = DEFAULT_TAIL_FRACTION) -> Tuple[float, float, float]:
    """Half peak-to-peak amplitude of the tail and of each half of the tail."""
    if not 0.0 < tail_fraction < 1.0:
        raise DomainError("tail_fraction", f"must lie in (0, 1), got {tail_fraction!r}")
    data = np.asarray(values, dtype=float)
    start = int(len(data) * (1.0 - tail_fraction))
    tail = data[start:]
    if len(tail) < 4:
        raise DomainError("tail_fraction", f"tail holds only {len(tail)} samples")
    half = len(tail) // 2
    first, second = tail[:half], tail[half:]
    return (
        float(np.ptp(tail)) / 2.0,
        float(np.ptp(first)) / 2.0,
        float(np.ptp(second)) / 2.0,
    )


def analyze_trajectory(
    traj: Trajectory,
    eq: Equilibrium,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> TrajectoryVerdict:
    if len(traj) == 0:
        raise DomainError("trajectory", "is empty")
    if traj.diverged:
        finite = traj.R_values[np.isfinite(traj.R_values)]
        deviation = float(np.max(np.abs(finite - eq.R_star))) if len(finite) else math.inf
        return TrajectoryVerdict(kind=DIVERGED, max_deviation=deviation)

    amplitude, first, second = tail_amplitude(traj.R_values, tail_fraction)
    start = int(len(traj) * (1.0 - tail_fraction))
    deviation = float(np.max(np.abs(traj.R_values[start:] - eq.R_star)))
    if deviation < TOL_CONV_REL * eq.R_star:
        return TrajectoryVerdict(kind=CONVERGED, amplitude=amplitude, max_deviation=deviation)
    if abs(first - second) <= STATIONARITY_TOL * max(first, second):
        return TrajectoryVerdict(kind=SUSTAINED_OSCILLATION, amplitude=amplitude, max_deviation=deviation)
    raise Inconclusive(
        f"tail amplitude still trending ({first!r} -> {second!r}); extend the horizon"
    )


def _local_peaks(values: np.ndarray) -> np.ndarray:
    inner = (values[1:-1] >= values[:-2]) & (values[1:-1] > values[2:])
    return np.flatnonzero(inner) + 1


def fit_decay_rate(
    traj: Trajectory,
    eq: Equilibrium,
    upper: float = FIT_WINDOW_UPPER_REL,
    lower: float = FIT_WINDOW_LOWER_REL,
) -> float:
    """Exponential decay rate of |R - R*| fitted inside a relative window.

    The regression carries a log(t) term so a double root (t e^{-t/tau}
    decay) does not bias the rate.
    """
    if not 0.0 < lower < upper:
        raise DomainError("upper", f"fit window must satisfy 0 < lower < upper, got ({lower!r}, {upper!r})")
    if traj.diverged:
        raise DomainError("trajectory", "cannot fit a decay rate to a diverged run")
    offset = traj.R_values - eq.R_star
    relative = np.abs(offset) / eq.R_star
    times = traj.times

    in_window = (relative <= upper) & (relative >= lower) & (times > 0.0)
    window = np.flatnonzero(in_window)
    if len(window) and np.any(np.diff(np.sign(offset[window])) != 0):
        peaks = _local_peaks(relative)
        window = peaks[in_window[peaks]]
    if len(window) < 3:
        raise Inconclusive(f"only {len(window)} samples inside the fit window")

    t = times[window]
    design = np.column_stack((np.ones_like(t), t, np.log(t)))
    coeffs, *_ = np.linalg.lstsq(design, np.log(relative[window]), rcond=None)
    return float(-coeffs[1])


def measured_amplitude(p: ProtocolParams, ic: InitialCondition, cfg: SimConfig, tail_fraction: float = 0.2) -> float:
    """Half peak-to-peak rate amplitude over the settled tail of a run."""
    traj = simulate(p, ic, cfg)
    if traj.diverged:
        raise Inconclusive(f"run diverged at t={traj.divergence_time!r}; no limit cycle to measure")
    return tail_amplitude(traj.R_values, tail_fraction)[0]


def power_law_exponent(offsets: Sequence[float], amplitudes: Sequence[float]) -> float:
    """Slope of log(amplitude) against log(offset)."""
    x = np.asarray(offsets, dtype=float)
    y = np.asarray(amplitudes, dtype=float)
    if len(x) < 2 or len(x) != len(y) or np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("offsets", "need at least two positive (offset, amplitude) pairs")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
