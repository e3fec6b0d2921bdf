"""RCP parameter validation and the equilibrium shared by every model."""
from __future__ import annotations

import math
from typing import Any

from rcp.entities import Equilibrium, ProtocolParams
from rcp.errors import DomainError


def _is_finite_number(value: Any) -> bool:
    if isinstance(value, bool):
        return False
    return isinstance(value, (int, float)) and math.isfinite(value)


def require_positive(name: str, value: Any) -> float:
    if not _is_finite_number(value):
        raise DomainError(name, f"must be a finite number, got {value!r}")
    if value <= 0:
        raise DomainError(name, f"must be > 0, got {value!r}")
    return float(value)


def require_non_negative(name: str, value: Any) -> float:
    if not _is_finite_number(value):
        raise DomainError(name, f"must be a finite number, got {value!r}")
    if value < 0:
        raise DomainError(name, f"must be >= 0, got {value!r}")
    return float(value)


def validate_params(p: ProtocolParams) -> ProtocolParams:
    """Return ``p`` unchanged when every field is inside its domain."""
    require_positive("a", p.a)
    require_non_negative("beta", p.beta)
    require_positive("C", p.C)
    require_positive("tau", p.tau)
    require_positive("kappa", p.kappa)
    return p


def equilibrium(p: ProtocolParams) -> Equilibrium:
    # R* = C, q* = 0 regardless of a, beta, tau and kappa.
    return Equilibrium(R_star=p.C, q_star=0.0)
