"""PacketSim: slotted, deterministic packet-level model of N RCP flows.

Every slot each source injects ``rate * slot`` (fractional) packets at the
fair rate it learned on the forward path. The bottleneck drains ``C * slot``
per slot into a FIFO queue. Every update interval the router recomputes the
fair rate from the arrival rate measured over that interval and its backlog.

The forward path is ``tau`` less half an update interval long; the measured
arrival rate lags by the other half, so the loop delay is one RTT.

The router backlog is arrivals minus capacity, integrated without the
empty-queue floor, which is the queue the fluid analysis uses. With
``clamp_queue`` set it reacts to the physical queue instead. Traces always
record the physical queue.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Callable, Deque, Dict, List, Union

import numpy as np

from config import (
    DEFAULT_TAIL_FRACTION,
    PACKET_DEFAULT_HORIZON_RTTS,
    PACKET_EVENT_LOG_LIMIT,
    PACKET_INITIAL_RATE_REL,
    PACKET_MAX_SLOT_FRACTION,
    PACKET_MIN_HORIZON_RTTS,
    PACKET_OSCILLATION_REL,
    PACKET_RATE_CAP_REL,
    PACKET_RATE_FLOOR_REL,
    PACKET_SLOT_FRACTION,
    PACKET_STATIONARITY_TOL,
)
from rcp.entities import PacketSimConfig, PacketTrace, QueueStats
from rcp.errors import ConfigError, DomainError, Inconclusive
from rcp.fluid import tail_amplitude

logger = logging.getLogger(__name__)


def clamp(v: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, v))


def _is_positive_number(value: Any) -> bool:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False
    return math.isfinite(value) and value > 0


def validate_packet_config(cfg: PacketSimConfig) -> PacketSimConfig:
    """Return ``cfg`` with every ``None`` default resolved, or raise ConfigError."""
    n = cfg.num_flows
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("num_flows", f"must be an integer >= 1, got {n!r}")
    for key in ("C", "tau", "a"):
        if not _is_positive_number(getattr(cfg, key)):
            raise ConfigError(key, f"must be a positive number, got {getattr(cfg, key)!r}")
    beta = cfg.beta
    if isinstance(beta, bool) or not isinstance(beta, (int, float)) or not math.isfinite(beta) or beta < 0:
        raise ConfigError("beta", f"must be a number >= 0, got {beta!r}")

    tau = float(cfg.tau)
    slot = tau * PACKET_SLOT_FRACTION if cfg.slot is None else cfg.slot
    update_interval = tau if cfg.update_interval is None else cfg.update_interval
    horizon = tau * PACKET_DEFAULT_HORIZON_RTTS if cfg.horizon is None else cfg.horizon
    initial_rate = PACKET_INITIAL_RATE_REL * cfg.C / n if cfg.initial_rate is None else cfg.initial_rate

    if not _is_positive_number(slot) or slot > PACKET_MAX_SLOT_FRACTION * tau * (1.0 + 1e-12):
        raise ConfigError("slot", f"must lie in (0, tau/10], got {slot!r}")
    if not _is_positive_number(update_interval) or update_interval < slot * (1.0 - 1e-12):
        raise ConfigError("update_interval", f"must be >= slot={slot!r}, got {update_interval!r}")
    if not _is_positive_number(horizon) or horizon <= PACKET_MIN_HORIZON_RTTS * tau:
        raise ConfigError("horizon", f"must exceed 10*tau={10 * tau!r}, got {horizon!r}")
    if not _is_positive_number(initial_rate):
        raise ConfigError("initial_rate", f"must be a positive number, got {initial_rate!r}")
    if cfg.max_queue is not None and not _is_positive_number(cfg.max_queue):
        raise ConfigError("max_queue", f"must be a positive number, got {cfg.max_queue!r}")
    if not isinstance(cfg.clamp_queue, bool):
        raise ConfigError("clamp_queue", f"must be true or false, got {cfg.clamp_queue!r}")

    return replace(
        cfg,
        slot=float(slot),
        update_interval=float(update_interval),
        horizon=float(horizon),
        initial_rate=float(initial_rate),
    )


class PacketSim:
    """Slot-stepped bottleneck with one router computing a shared fair rate.

    All state changes happen inside :meth:`tick`; one tick is one slot.
    """

    def __init__(self, cfg: PacketSimConfig) -> None:
        self.cfg = validate_packet_config(cfg)
        tau = self.cfg.tau
        self.slot: float = self.cfg.slot
        self.update_slots: int = max(1, int(round(self.cfg.update_interval / self.slot)))
        self.interval: float = self.update_slots * self.slot
        self.forward_slots: int = max(1, int(round(tau / self.slot)) - self.update_slots // 2)

        fair_share = self.cfg.C / self.cfg.num_flows
        self.rate_floor: float = PACKET_RATE_FLOOR_REL * fair_share
        self.rate_cap: float = PACKET_RATE_CAP_REL * fair_share

        self.rate: float = self.cfg.initial_rate
        # Oldest entry is the rate the sources are acting on this slot.
        self.in_flight: Deque[float] = deque([self.rate] * self.forward_slots, maxlen=self.forward_slots)
        self.queue: float = 0.0
        self.backlog: float = 0.0
        self.time: float = 0.0
        self.slots_done: int = 0
        self.arrived: float = 0.0
        self.delivered: float = 0.0
        self.dropped: float = 0.0
        self.at_clamp: bool = False

        self.times: List[float] = []
        self.queue_samples: List[float] = []
        self.rate_samples: List[float] = []
        self.utilization_samples: List[float] = []
        self.event_log: List[str] = []
        self._log_event(
            f"Packet sim initialized: N={self.cfg.num_flows} C={self.cfg.C!r} tau={tau!r} "
            f"a={self.cfg.a!r} beta={self.cfg.beta!r} clamp_queue={self.cfg.clamp_queue}"
        )

    def _log_event(self, message: str) -> None:
        self.event_log.append(message)
        self.event_log = self.event_log[-PACKET_EVENT_LOG_LIMIT:]

    # ------------------------------------------------------------------
    # Per-slot dynamics
    # ------------------------------------------------------------------

    def _serve(self, arrivals: float) -> None:
        service = self.cfg.C * self.slot
        pending = self.queue + arrivals
        was_empty = self.queue <= 0.0
        self.delivered += min(pending, service)
        self.queue = max(0.0, pending - service)
        self.backlog += arrivals - service
        if self.cfg.max_queue is not None and self.queue > self.cfg.max_queue:
            excess = self.queue - self.cfg.max_queue
            self.dropped += excess
            self.backlog -= excess
            self.queue = self.cfg.max_queue
        if was_empty and self.queue > 0.0:
            self._log_event(f"Queue building at t={self.time:.6g}")
        elif not was_empty and self.queue <= 0.0:
            self._log_event(f"Queue drained at t={self.time:.6g}")

    def _update_rate(self) -> None:
        T = self.interval
        tau = self.cfg.tau
        y = self.arrived / T
        q = self.queue if self.cfg.clamp_queue else self.backlog
        mismatch = self.cfg.a * (self.cfg.C - y) - self.cfg.beta * q / tau
        proposed = self.rate * (1.0 + (T / tau) * mismatch / self.cfg.C)
        self.rate = clamp(proposed, self.rate_floor, self.rate_cap)
        hit = self.rate != proposed
        if hit and not self.at_clamp:
            side = "cap" if proposed > self.rate_cap else "floor"
            self._log_event(f"Rate clamped to {side} at t={self.time:.6g}")
        self.at_clamp = hit

        self.times.append(self.time)
        self.queue_samples.append(self.queue)
        self.rate_samples.append(self.rate)
        self.utilization_samples.append(self.delivered / (self.cfg.C * T))
        self.arrived = 0.0
        self.delivered = 0.0

    def tick(self) -> None:
        arrivals = self.cfg.num_flows * self.in_flight[0] * self.slot
        self.arrived += arrivals
        self._serve(arrivals)
        self.in_flight.append(self.rate)
        self.slots_done += 1
        self.time = self.slots_done * self.slot
        if self.slots_done % self.update_slots == 0:
            self._update_rate()

    def run(self) -> PacketTrace:
        total = int(math.ceil(self.cfg.horizon / self.slot - 1e-9))
        while self.slots_done < total:
            self.tick()
        self._log_event(f"Packet sim finished at t={self.time:.6g} (dropped {self.dropped:.6g})")
        logger.info(
            "packet sim done t=%g samples=%d final_queue=%g final_rate=%g",
            self.time,
            len(self.times),
            self.queue,
            self.rate,
        )
        return self.trace()

    def trace(self) -> PacketTrace:
        return PacketTrace(
            times=np.asarray(self.times),
            queue_lengths=np.asarray(self.queue_samples),
            fair_rates=np.asarray(self.rate_samples),
            utilization=np.asarray(self.utilization_samples),
            event_log=list(self.event_log),
        )


def run_packet_sim(cfg: PacketSimConfig) -> PacketTrace:
    return PacketSim(cfg).run()


def queue_stats(trace: PacketTrace, tail_fraction: float = DEFAULT_TAIL_FRACTION) -> QueueStats:
    if len(trace) == 0:
        raise DomainError("trace", "is empty")
    amplitude, first, second = tail_amplitude(trace.queue_lengths, tail_fraction)
    start = int(len(trace) * (1.0 - tail_fraction))
    mean = float(np.mean(trace.queue_lengths[start:]))
    if amplitude <= PACKET_OSCILLATION_REL * (mean + 1.0):
        return QueueStats(mean=mean, amplitude=amplitude, oscillating=False)
    if abs(first - second) <= PACKET_STATIONARITY_TOL * max(first, second):
        return QueueStats(mean=mean, amplitude=amplitude, oscillating=True)
    raise Inconclusive(f"queue amplitude still trending ({first!r} -> {second!r})")


# ---------------------------------------------------------------------------
# key=value scenario files
# ---------------------------------------------------------------------------

_BOOLEANS = {"true": True, "false": False, "1": True, "0": False}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOLEANS[text.lower()]
    except KeyError:
        raise ValueError(text) from None


_PARSERS: Dict[str, Callable[[str], Any]] = {f.name: float for f in fields(PacketSimConfig)}
_PARSERS.update(num_flows=int, clamp_queue=_parse_bool)
_REQUIRED = ("num_flows", "C", "tau", "a", "beta")


def parse_packet_config(text: str) -> PacketSimConfig:
    values: Dict[str, Union[int, float, bool]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key, "expected key=value")
        if key not in _PARSERS:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "duplicate key")
        try:
            values[key] = _PARSERS[key](value.strip())
        except ValueError:
            raise ConfigError(key, f"cannot parse {value.strip()!r}") from None
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(key, "missing required key")
    return PacketSimConfig(**values)


def load_packet_config(path: Path) -> PacketSimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config file ({exc.strerror})") from None
    return parse_packet_config(text)
