"""Exponential decay rate toward equilibrium and the dynamic regime.

For the rate-mismatch-only model the rate comes from a case analysis on the
scalar characteristic equation; with queue feedback it is read off the
rightmost characteristic root.
"""
from __future__ import annotations

import math

from scipy.optimize import root_scalar

from config import BISECTION_RTOL, HALF_PI, INV_E, U_FLOOR
from rcp.entities import NON_OSCILLATORY, OSCILLATORY, UNSTABLE, ConvergenceReport, ProtocolParams
from rcp.model import require_positive, validate_params
from rcp.stability import is_locally_stable, rightmost_roots

SIGMA1 = "sigma1"
SIGMA2 = "sigma2"
SIGMA3 = "sigma3"
RIGHTMOST = "rightmost-root"


def _bisect(func, lo: float, hi: float) -> float:
    result = root_scalar(func, bracket=(lo, hi), method="bisect", xtol=1e-300, rtol=BISECTION_RTOL)
    return float(result.root)


def g_of_u(u: float) -> float:
    return (u / math.sin(u)) * math.exp(-u / math.tan(u))


def decay_rate_no_queue(a: float, tau: float) -> ConvergenceReport:
    a = require_positive("a", a)
    tau = require_positive("tau", tau)
    if a >= HALF_PI:
        return ConvergenceReport(sigma=0.0, binding_branch=UNSTABLE, regime=UNSTABLE)

    if a <= INV_E:
        # x e^{-x} rises monotonically to 1/e on (0, 1].
        if INV_E - a <= 0.0:
            return ConvergenceReport(sigma=1.0 / tau, binding_branch=SIGMA1, regime=NON_OSCILLATORY)
        x = _bisect(lambda s: s * math.exp(-s) - a, 0.0, 1.0)
        return ConvergenceReport(sigma=x / tau, binding_branch=SIGMA2, regime=NON_OSCILLATORY)

    if g_of_u(U_FLOOR) >= a:
        u = U_FLOOR
    else:
        u = _bisect(lambda v: g_of_u(v) - a, U_FLOOR, HALF_PI)
    sigma = u / (tau * math.tan(u))
    return ConvergenceReport(sigma=max(sigma, 0.0), binding_branch=SIGMA3, regime=OSCILLATORY)


def decay_rate_with_queue(p: ProtocolParams) -> ConvergenceReport:
    validate_params(p)
    if not is_locally_stable(p):
        return ConvergenceReport(sigma=0.0, binding_branch=RIGHTMOST, regime=UNSTABLE)
    lam = rightmost_roots(p, 2).rightmost
    sigma = max(-lam.real, 0.0)
    regime = NON_OSCILLATORY if lam.imag == 0.0 else OSCILLATORY
    return ConvergenceReport(sigma=sigma, binding_branch=RIGHTMOST, regime=regime)


def non_oscillatory(a: float) -> bool:
    return require_positive("a", a) <= INV_E


def classify_regime(a: float) -> str:
    a = require_positive("a", a)
    if a <= INV_E:
        return NON_OSCILLATORY
    if a < HALF_PI:
        return OSCILLATORY
    return UNSTABLE
