from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from config import SCENARIOS_FILE
from rcp.entities import InitialCondition, PacketSimConfig, ProtocolParams, SimConfig

SCENARIO_ID_RE = re.compile(r"^[a-z][a-z0-9-]*$")
FLUID = "fluid"
PACKET = "packet"
KINDS = (FLUID, PACKET)


@dataclass(frozen=True)
class ScenarioDefinition:
    key: str
    kind: str
    description: str
    a: float
    beta: float
    C: float = 1.0
    tau: float = 1.0
    kappa: float = 1.0
    R0: Optional[float] = None
    q0: float = 0.0
    horizon: Optional[float] = None
    steps_per_delay: int = 32
    num_flows: int = 100
    update_interval: Optional[float] = None
    slot: Optional[float] = None

    def params(self) -> ProtocolParams:
        return ProtocolParams(a=self.a, beta=self.beta, C=self.C, tau=self.tau, kappa=self.kappa)

    def initial_condition(self) -> InitialCondition:
        R0 = 1.2 * self.C if self.R0 is None else self.R0
        return InitialCondition(R0=R0, q0=self.q0)

    def sim_config(self) -> SimConfig:
        horizon = 300.0 * self.tau if self.horizon is None else self.horizon
        return SimConfig(horizon=horizon, steps_per_delay=self.steps_per_delay)

    def packet_config(self) -> PacketSimConfig:
        return PacketSimConfig(
            num_flows=self.num_flows,
            C=self.C,
            tau=self.tau,
            a=self.a,
            beta=self.beta,
            update_interval=self.update_interval,
            slot=self.slot,
            horizon=self.horizon,
        )

    def to_runtime_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "description": self.description,
            "a": self.a,
            "beta": self.beta,
            "C": self.C,
            "tau": self.tau,
            "kappa": self.kappa,
            "R0": self.R0,
            "q0": self.q0,
            "horizon": self.horizon,
            "steps_per_delay": self.steps_per_delay,
            "num_flows": self.num_flows,
            "update_interval": self.update_interval,
            "slot": self.slot,
        }


def _fluid(key: str, description: str, a: float, beta: float, **extra: Any) -> ScenarioDefinition:
    return ScenarioDefinition(key=key, kind=FLUID, description=description, a=a, beta=beta, **extra)


def _packet(key: str, description: str, a: float, beta: float, tau: float) -> ScenarioDefinition:
    slot = tau / 100.0
    return ScenarioDefinition(
        key=key,
        kind=PACKET,
        description=description,
        a=a,
        beta=beta,
        tau=tau,
        update_interval=slot,
        slot=slot,
        horizon=300.0 * tau,
    )


DEFAULT_SCENARIO_DEFINITIONS: Dict[str, ScenarioDefinition] = {
    entry.key: entry
    for entry in (
        _fluid("low-beta-stable", "Rate spirals into equilibrium below kappa_c", 1.5, 0.1, kappa=0.95, R0=1.2, horizon=400.0),
        _fluid("low-beta-cycle", "Stable limit cycle just past kappa_c", 1.5, 0.1, kappa=1.05, R0=1.2, horizon=400.0),
        _fluid("subcritical-blowup", "Sub-critical Hopf; the rate blows up", 0.75, 0.518, kappa=1.05, R0=1.03, horizon=400.0),
        _fluid("subcritical-stable", "Sub-critical configuration below kappa_c", 0.75, 0.518, kappa=0.95, R0=1.03, horizon=400.0),
        _fluid("supercritical-stable", "Super-critical configuration below kappa_c", 1.25, 0.454, kappa=0.95, R0=1.05, horizon=400.0),
        _fluid("supercritical-cycle", "Small stable limit cycle past kappa_c", 1.25, 0.454, kappa=1.05, R0=1.05, horizon=400.0),
        _fluid("rate-only-overdamped", "Rate-only model, a < 1/e", 0.1, 0.0, C=10.0, R0=12.0, horizon=100.0),
        _fluid("rate-only-fastest", "Rate-only model at a = 1/e", math.exp(-1.0), 0.0, C=10.0, R0=12.0, horizon=100.0),
        _fluid("rate-only-underdamped", "Rate-only model, 1/e < a < pi/2", 1.2, 0.0, C=10.0, R0=12.0, horizon=100.0),
        _fluid("rate-only-unstable", "Rate-only model, a > pi/2", 1.6, 0.0, C=10.0, R0=12.0, horizon=100.0),
        _packet("packet-no-queue-feedback", "Packet queue settles without queue feedback", 0.5, 0.0, 100.0),
        _packet("packet-queue-feedback", "Packet queue oscillates with queue feedback", 0.5, 1.0, 100.0),
        _packet("packet-subcritical", "Large-amplitude packet queue cycles", 0.8, 0.55, 200.0),
        _packet("packet-supercritical", "Small-amplitude packet queue cycles", 1.3, 0.4, 200.0),
    )
}


def _is_positive_number(value: Any) -> bool:
    if isinstance(value, bool):
        return False
    return isinstance(value, (int, float)) and math.isfinite(value) and value > 0


def _is_non_negative_number(value: Any) -> bool:
    if isinstance(value, bool):
        return False
    return isinstance(value, (int, float)) and math.isfinite(value) and value >= 0


def _coerce_int(value: Any, *, minimum: int) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        result = value
    elif isinstance(value, float) and value.is_integer():
        result = int(value)
    else:
        return None
    return result if result >= minimum else None


def _optional_positive(entry: Dict[str, Any], name: str) -> tuple[bool, Optional[float]]:
    value = entry.get(name)
    if value is None:
        return True, None
    if not _is_positive_number(value):
        return False, None
    return True, float(value)


def _parse_scenario_entry(key: str, entry: Dict[str, Any]) -> ScenarioDefinition | None:
    if not SCENARIO_ID_RE.fullmatch(key):
        return None

    kind = entry.get("kind", FLUID)
    description = entry.get("description", "")
    if kind not in KINDS or not isinstance(description, str):
        return None

    a = entry.get("a")
    beta = entry.get("beta", 0.0)
    if not _is_positive_number(a) or not _is_non_negative_number(beta):
        return None
    numbers: Dict[str, float] = {}
    for name, default in (("C", 1.0), ("tau", 1.0), ("kappa", 1.0)):
        value = entry.get(name, default)
        if not _is_positive_number(value):
            return None
        numbers[name] = float(value)
    q0 = entry.get("q0", 0.0)
    if isinstance(q0, bool) or not isinstance(q0, (int, float)) or not math.isfinite(q0):
        return None

    optional: Dict[str, Optional[float]] = {}
    for name in ("R0", "horizon", "update_interval", "slot"):
        ok, value = _optional_positive(entry, name)
        if not ok:
            return None
        optional[name] = value

    steps_per_delay = _coerce_int(entry.get("steps_per_delay", 32), minimum=4)
    num_flows = _coerce_int(entry.get("num_flows", 100), minimum=1)
    if steps_per_delay is None or num_flows is None:
        return None

    return ScenarioDefinition(
        key=key,
        kind=kind,
        description=description.strip(),
        a=float(a),
        beta=float(beta),
        q0=float(q0),
        steps_per_delay=steps_per_delay,
        num_flows=num_flows,
        **numbers,
        **optional,
    )


def _ordered_catalog(scenarios: Iterable[ScenarioDefinition]) -> Dict[str, ScenarioDefinition]:
    ordered = sorted(scenarios, key=lambda scenario: (KINDS.index(scenario.kind), scenario.key))
    return {scenario.key: scenario for scenario in ordered}


def load_scenario_catalog(path: Path = SCENARIOS_FILE) -> Dict[str, ScenarioDefinition]:
    if not path.exists():
        return _ordered_catalog(DEFAULT_SCENARIO_DEFINITIONS.values())

    try:
        raw = json.loads(path.read_text())
    except (json.JSONDecodeError, OSError):
        return _ordered_catalog(DEFAULT_SCENARIO_DEFINITIONS.values())

    if not isinstance(raw, dict):
        return _ordered_catalog(DEFAULT_SCENARIO_DEFINITIONS.values())

    scenarios: Dict[str, ScenarioDefinition] = {}
    for key, entry in raw.items():
        if not isinstance(key, str) or not isinstance(entry, dict):
            continue
        scenario = _parse_scenario_entry(key, entry)
        if scenario is None:
            continue
        scenarios[key] = scenario

    if not scenarios:
        return _ordered_catalog(DEFAULT_SCENARIO_DEFINITIONS.values())

    return _ordered_catalog(scenarios.values())
