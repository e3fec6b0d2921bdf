"""Exception hierarchy shared by every rcplab module."""
from __future__ import annotations


class RcpError(Exception):
    """Base class for all rcplab failures."""


class DomainError(RcpError, ValueError):
    """A parameter lies outside the domain of the requested operation."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class ConfigError(RcpError, ValueError):
    """A configuration file or record is malformed."""

    def __init__(self, key: str, reason: str):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


class NumericalBlowup(RcpError):
    """Raised inside the integrator when the state leaves the finite range."""

    def __init__(self, time: float, value: float):
        super().__init__(f"state blew up at t={time!r} (R={value!r})")
        self.time = time
        self.value = value


class ConvergenceError(RcpError):
    """Newton refinement of a characteristic root did not converge."""

    def __init__(self, seed: complex, reason: str):
        super().__init__(f"newton from seed {seed!r}: {reason}")
        self.seed = seed


class Inconclusive(RcpError):
    """A trajectory or trace has not settled by the end of the horizon."""


class InternalError(RcpError, RuntimeError):
    """An algebraic guard failed; indicates an implementation bug."""
