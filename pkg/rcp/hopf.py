"""Hopf bifurcation type for the RCP model with queue feedback.

The first Lyapunov coefficient c1(0) is computed twice: once by assembling
the center-manifold coefficients (Omega, g20, g11, g02, g21 with the w20/w11
corrections) and once from its closed form in Theta = omega0 * tau. The two
must agree; criticality then follows from mu2 = -Re(c1) / alpha'(0).
"""
from __future__ import annotations

import cmath
import logging
import math
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.linalg import solve
from scipy.optimize import root_scalar

from config import (
    BISECTION_RTOL,
    G11_TOL,
    HALF_PI,
    HOPF_SURFACE_TOL,
    PATH_AGREEMENT_TOL,
    THETA_H_BRACKET,
)
from rcp.entities import (
    SUB_CRITICAL,
    SUPER_CRITICAL,
    HopfIntermediates,
    HopfReport,
    InitialCondition,
    ProtocolParams,
    SimConfig,
)
from rcp.errors import DomainError, InternalError
from rcp.fluid import measured_amplitude
from rcp.model import require_non_negative, require_positive
from rcp.stability import hopf_kappa_c, theta

logger = logging.getLogger(__name__)

AMPLITUDE_CONSTANT = 20.0 * math.pi / (3.0 * math.pi - 2.0)


def _require_theta(big_theta: float) -> float:
    big_theta = require_positive("Theta", big_theta)
    if big_theta > HALF_PI * (1.0 + 1e-12):
        raise DomainError("Theta", f"must lie in (0, pi/2], got {big_theta!r}")
    return big_theta


def omega0_at_hopf(a: float, beta: float, kappa: float, tau: float) -> float:
    kappa = require_positive("kappa", kappa)
    tau = require_positive("tau", tau)
    kc = hopf_kappa_c(a, beta)
    if abs(kappa - kc) > HOPF_SURFACE_TOL * max(1.0, kc):
        raise DomainError("kappa", f"{kappa!r} is not on the Hopf surface (kappa_c={kc!r})")
    return kappa * theta(a, beta).theta / tau


# ---------------------------------------------------------------------------
# Center-manifold path
# ---------------------------------------------------------------------------

def center_manifold(a: float, beta: float, kappa: float, C: float, tau: float) -> Tuple[complex, HopfIntermediates]:
    """c1(0) and its intermediates at a Hopf point (a, beta, kappa)."""
    omega0 = kappa * theta(a, beta).theta / tau
    big_theta = omega0 * tau
    rot = cmath.exp(-1j * big_theta)  # e^{-i omega0 tau}

    q02 = -1j * omega0 * tau * tau / (kappa * beta + 1j * a * omega0 * tau)
    q_star02 = kappa * beta / (1j * omega0 * tau * tau)
    omega_n = 1.0 / (1.0 - 1j * big_theta + kappa * beta / (kappa * beta - 1j * a * big_theta))
    omega_bar = omega_n.conjugate()
    q0 = np.array([1.0, q02])

    ka = kappa * a / (C * tau)
    kb = kappa * beta / (C * tau * tau)
    g20 = -2.0 * omega_bar * (ka * rot + kb * q02)
    g11 = -omega_bar * (ka * (rot.conjugate() + rot) + kb * (q02.conjugate() + q02))
    g02 = -2.0 * omega_bar * (ka * rot.conjugate() + kb * q02.conjugate())

    # Linear part: (A phi)(0) = L0 phi(0) + L1 phi(-tau).
    l0 = kappa * np.array([[0.0, -beta / (tau * tau)], [0.0, 0.0]], dtype=complex)
    l1 = kappa * np.array([[-a / tau, 0.0], [1.0, 0.0]], dtype=complex)
    f20 = np.array([-2.0 * (ka * rot + kb * q02), 0.0])
    f11 = np.array([-(ka * 2.0 * rot.real + kb * 2.0 * q02.real), 0.0])
    e = solve(2j * omega0 * np.eye(2) - l0 - l1 * rot * rot, f20)
    # F11 vanishes on the Hopf surface; solving against roundoff blows up as beta -> 0.
    if beta > 0.0 and abs(f11[0]) > G11_TOL * max(1.0, abs(f20[0])):
        f = solve(-(l0 + l1), f11)
    else:
        f = np.zeros(2, dtype=complex)

    c_q = 1j * g20 / omega0
    c_qbar = 1j * g02.conjugate() / (3.0 * omega0)
    d_q = -1j * g11 / omega0
    d_qbar = 1j * g11.conjugate() / omega0
    w20_0 = c_q * q0 + c_qbar * q0.conjugate() + e
    w20_tau = c_q * rot + c_qbar * rot.conjugate() + e[0] * rot * rot
    w11_0 = d_q * q0 + d_qbar * q0.conjugate() + f
    w11_tau = d_q * rot + d_qbar * rot.conjugate() + f[0]

    g21 = -omega_bar * (
        ka * (w20_tau + 2.0 * w11_tau + w20_0[0] * rot.conjugate() + 2.0 * w11_0[0] * rot)
        + kb * (q02.conjugate() * w20_0[0] + 2.0 * q02 * w11_0[0] + w20_0[1] + 2.0 * w11_0[1])
    )
    c1 = (1j / (2.0 * omega0)) * (g20 * g11 - 2.0 * abs(g11) ** 2 - abs(g02) ** 2 / 3.0) + g21 / 2.0

    spread = q02 * q02 * (beta + 2j * a * big_theta / kappa)
    intermediates = HopfIntermediates(
        Omega=complex(omega_n),
        q02=complex(q02),
        q_star02=complex(q_star02),
        g20=complex(g20),
        g11=complex(g11),
        g02=complex(g02),
        g21=complex(g21),
        e=(complex(e[0]), complex(e[1])),
        f=(complex(f[0]), complex(f[1])),
        A1=complex(4.0 * tau * tau + spread),
        A2=complex(2.0 * tau * tau + spread),
        w20_at_zero=(complex(w20_0[0]), complex(w20_0[1])),
        w20_at_minus_tau=complex(w20_tau),
    )
    return complex(c1), intermediates


def _surface_point(big_theta: float) -> Tuple[float, float]:
    # kappa = 1 parameterization of the Hopf surface.
    return big_theta * math.sin(big_theta), big_theta * big_theta * math.cos(big_theta)


# ---------------------------------------------------------------------------
# Closed forms in Theta
# ---------------------------------------------------------------------------

def c1_closed_form(big_theta: float, C: float, tau: float) -> complex:
    omega0 = big_theta / tau
    z = cmath.exp(-1j * big_theta)
    n2 = 4.0 - 3.0 * z + z ** 3
    n1 = 8.0 - 3.0 * z + z ** 3
    s = 3.0 + 2j * big_theta + z * z
    return -(2j * omega0 / (C * C)) * n2 / (s * n1)


def re_c1_closed_form(big_theta: float, C: float, tau: float) -> float:
    t = big_theta
    s1, s2, s3, s4, s5 = (math.sin(k * t) for k in range(1, 6))
    c1_, c2, c3 = (math.cos(k * t) for k in range(1, 4))
    numerator = (
        4.0 * s5 - 3.0 * s4 - 24.0 * s3 + 42.0 * s2 + 4.0 * s1
        - 12.0 * t * (2.0 * c3 - c2 - 6.0 * c1_ + 7.0)
    )
    d1 = (8.0 * c3 - 3.0 * c2 + 1.0) ** 2 + (8.0 * s3 - 3.0 * s2) ** 2
    d2 = (3.0 + c2) ** 2 + (2.0 * t - s2) ** 2
    return 2.0 * t * numerator / (C * C * tau * d1 * d2)


def lyapunov_c1(big_theta: float, C: float, tau: float) -> complex:
    """c1(0) on the Hopf surface, cross-checked between both computation paths."""
    big_theta = _require_theta(big_theta)
    C = require_positive("C", C)
    tau = require_positive("tau", tau)

    closed = c1_closed_form(big_theta, C, tau)
    real_part = re_c1_closed_form(big_theta, C, tau)
    a, beta = _surface_point(big_theta)
    assembled, intermediates = center_manifold(a, max(beta, 0.0), 1.0, C, tau)

    scale = abs(assembled)
    if abs(assembled - closed) > PATH_AGREEMENT_TOL * scale:
        raise InternalError(f"c1 paths disagree at Theta={big_theta!r}: {assembled!r} vs {closed!r}")
    if abs(real_part - closed.real) > PATH_AGREEMENT_TOL * scale:
        raise InternalError(f"Re(c1) closed forms disagree at Theta={big_theta!r}")
    _check_g11(intermediates)
    return complex(real_part, closed.imag)


def _check_g11(intermediates: HopfIntermediates) -> None:
    if abs(intermediates.g11) > G11_TOL * max(1.0, abs(intermediates.g20)):
        raise InternalError(f"g11 should vanish, got {intermediates.g11!r}")


def alpha_prime(big_theta: float, kappa: float, tau: float) -> float:
    big_theta = _require_theta(big_theta)
    kappa = require_positive("kappa", kappa)
    tau = require_positive("tau", tau)
    t = big_theta
    den = (3.0 + math.cos(2.0 * t)) ** 2 + (2.0 * t - math.sin(2.0 * t)) ** 2
    value = (t / (kappa * tau)) * 4.0 * t * (1.0 + math.sin(t) ** 2) / den
    if not value > 0.0:
        raise InternalError(f"alpha'(0) evaluated to {value!r} at Theta={big_theta!r}")
    return value


def _classify(mu2: float) -> str:
    return SUB_CRITICAL if mu2 < 0.0 else SUPER_CRITICAL


def hopf_report(a: float, beta: float, C: float, tau: float) -> HopfReport:
    a = require_positive("a", a)
    beta = require_non_negative("beta", beta)
    if beta == 0.0:
        raise DomainError("beta", "beta = 0 is always super-critical; use amplitude_no_queue")
    C = require_positive("C", C)
    tau = require_positive("tau", tau)

    kc = hopf_kappa_c(a, beta)
    omega0 = omega0_at_hopf(a, beta, kc, tau)
    big_theta = omega0 * tau
    c1 = lyapunov_c1(big_theta, C, tau)
    assembled, intermediates = center_manifold(a, beta, kc, C, tau)
    if abs(assembled - c1) > PATH_AGREEMENT_TOL * abs(assembled):
        raise InternalError(f"c1 at (a={a!r}, beta={beta!r}) disagrees with the Theta form")
    _check_g11(intermediates)

    alpha = alpha_prime(big_theta, kc, tau)
    mu2 = -c1.real / alpha
    return HopfReport(
        omega0=omega0,
        Theta=big_theta,
        kappa_c=kc,
        c1=c1,
        alpha_prime=alpha,
        mu2=mu2,
        beta2=2.0 * c1.real,
        classification=_classify(mu2),
        intermediates=intermediates,
    )


def theta_threshold() -> float:
    """Theta at which the bifurcation switches from sub- to super-critical."""
    lo, hi = THETA_H_BRACKET
    f_lo, f_hi = re_c1_closed_form(lo, 1.0, 1.0), re_c1_closed_form(hi, 1.0, 1.0)
    if f_lo * f_hi >= 0.0:
        raise InternalError(f"Re(c1) has no sign change on [{lo!r}, {hi!r}]")
    result = root_scalar(
        lambda t: re_c1_closed_form(t, 1.0, 1.0),
        bracket=(lo, hi),
        method="bisect",
        xtol=1e-300,
        rtol=BISECTION_RTOL,
    )
    return float(result.root)


def hopf_sweep(thetas: Iterable[float], C: float = 1.0, tau: float = 1.0) -> List[Tuple[float, float, float, str]]:
    """(Theta, mu2, beta2, classification) rows at kappa = 1."""
    rows = []
    for big_theta in thetas:
        c1 = lyapunov_c1(big_theta, C, tau)
        mu2 = -c1.real / alpha_prime(big_theta, 1.0, tau)
        rows.append((float(big_theta), mu2, 2.0 * c1.real, _classify(mu2)))
    return rows


def amplitude_no_queue(kappa: float, kappa_c: float, R_star: float) -> float:
    """Limit-cycle amplitude of the rate-only model just past kappa_c."""
    kappa = require_positive("kappa", kappa)
    kappa_c = require_positive("kappa_c", kappa_c)
    R_star = require_positive("R_star", R_star)
    if kappa < kappa_c:
        raise DomainError("kappa", f"must be >= kappa_c={kappa_c!r}, got {kappa!r}")
    return R_star * math.sqrt(AMPLITUDE_CONSTANT * (kappa - kappa_c))


def measured_amplitudes(
    a: float,
    C: float,
    tau: float,
    offsets: Sequence[float],
    horizon: float = 1500.0,
    steps_per_delay: int = 16,
) -> List[Tuple[float, float, float, float]]:
    """(kappa, offset, predicted, measured) for the rate-only model past kappa_c."""
    kc = hopf_kappa_c(a, 0.0)
    rows = []
    for offset in offsets:
        offset = require_positive("offset", offset)
        kappa = kc + offset
        predicted = amplitude_no_queue(kappa, kc, C)
        measured = measured_amplitude(
            ProtocolParams(a=a, beta=0.0, C=C, tau=tau, kappa=kappa),
            InitialCondition(R0=C + predicted),
            SimConfig(horizon=horizon, steps_per_delay=steps_per_delay),
        )
        logger.info("amplitude offset=%r predicted=%r measured=%r", offset, predicted, measured)
        rows.append((kappa, offset, predicted, measured))
    return rows
