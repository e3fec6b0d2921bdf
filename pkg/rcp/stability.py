"""Local stability of the linearized RCP model.

Closed-form conditions (theta, Hopf threshold kappa_c, stability boundary,
transversality) plus a numerical root finder for the characteristic
quasi-polynomials:

    beta > 0:  lam^2 tau^2 e^{lam tau} + a kappa tau lam + kappa^2 beta = 0
    beta = 0:  lam + (kappa a / tau) e^{-lam tau} = 0

Roots are seeded by Chebyshev collocation of the infinitesimal generator of
the delay system on [-tau, 0] and refined by Newton on the exact function.
"""
from __future__ import annotations

import cmath
import logging
import math
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.linalg import eigvals
from scipy.optimize import brentq, root_scalar
from scipy.special import lambertw

from config import (
    DEDUP_TOL,
    HALF_PI,
    NEWTON_MAX_ITER,
    NEWTON_RESIDUAL_TOL,
    NEWTON_STEP_TOL,
    REAL_ROOT_TOL,
    ROOT_STABILITY_TOL,
    SPECTRAL_MAX_NODES,
    SPECTRAL_NODES,
)
from rcp.entities import ProtocolParams, Spectrum, ThetaValue
from rcp.errors import ConvergenceError, DomainError, InternalError
from rcp.model import require_non_negative, require_positive, validate_params

logger = logging.getLogger(__name__)

SPECTRAL_METHOD = "spectral+newton"
LAMBERT_METHOD = "lambertW-oracle"


# ---------------------------------------------------------------------------
# Closed-form conditions
# ---------------------------------------------------------------------------

def theta(a: float, beta: float) -> ThetaValue:
    a = require_positive("a", a)
    beta = require_non_negative("beta", beta)
    if beta == 0.0:
        return ThetaValue(theta=a, a=a, beta=beta)
    value = math.sqrt((a * a + math.sqrt(a ** 4 + 4.0 * beta * beta)) / 2.0)
    return ThetaValue(theta=value, a=a, beta=beta)


def hopf_kappa_c(a: float, beta: float) -> float:
    """Smallest kappa at which a root pair reaches the imaginary axis."""
    th = theta(a, beta).theta
    if beta == 0.0:
        return HALF_PI / a
    return math.asin(min(1.0, a / th)) / th


def is_locally_stable(p: ProtocolParams) -> bool:
    validate_params(p)
    if p.beta == 0.0:
        return p.a * p.kappa < HALF_PI
    th = theta(p.a, p.beta).theta
    return p.kappa * th < math.asin(min(1.0, p.a / th))


def stability_boundary_beta(a: float) -> float:
    """The beta at which (a, beta, kappa=1) sits on the Hopf surface."""
    a = require_positive("a", a)
    if a >= HALF_PI:
        raise DomainError("a", f"no beta >= 0 is stable for a >= pi/2, got {a!r}")
    # theta * sin(theta) is increasing on (0, pi/2] and equals a at the boundary.
    th = brentq(lambda x: x * math.sin(x) - a, a, HALF_PI, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    radicand = (2.0 * th * th - a * a) ** 2 - a ** 4
    return math.sqrt(max(radicand, 0.0)) / 2.0


def transversality_sign(a: float, beta: float, tau: float = 1.0) -> int:
    """Sign of Re((d lam / d kappa)^-1) at kappa_c; always +1."""
    kc = hopf_kappa_c(a, beta)
    big_theta = kc * theta(a, beta).theta
    num = a * a * big_theta ** 2 + 2.0 * kc * kc * beta * beta
    den = a * a * big_theta ** 2 + 4.0 * kc * kc * beta * beta
    value = kc * tau * num / den
    if not value > 0.0:
        raise InternalError(f"transversality evaluated to {value!r} at a={a!r}, beta={beta!r}")
    return 1


def crossing_speed(a: float, beta: float, tau: float = 1.0) -> float:
    """Re(d lam / d kappa) of the crossing root at kappa = kappa_c."""
    require_positive("tau", tau)
    kc = hopf_kappa_c(a, beta)
    lam = 1j * kc * theta(a, beta).theta / tau
    if beta == 0.0:
        decay = cmath.exp(-lam * tau)
        h_kappa = (a / tau) * decay
        h_lam = 1.0 - kc * a * decay
    else:
        h_kappa = a * tau * lam + 2.0 * kc * beta
        h_lam = (2.0 * lam * tau * tau + lam * lam * tau ** 3) * cmath.exp(lam * tau) + a * kc * tau
    return (-h_kappa / h_lam).real


# ---------------------------------------------------------------------------
# Characteristic function
# ---------------------------------------------------------------------------

def characteristic_function(lam: complex, p: ProtocolParams) -> Tuple[complex, complex]:
    """Value and derivative in ``lam`` of the characteristic function."""
    a, beta, tau, kappa = p.a, p.beta, p.tau, p.kappa
    if beta == 0.0:
        decay = cmath.exp(-lam * tau)
        return lam + (kappa * a / tau) * decay, 1.0 - kappa * a * decay
    grow = cmath.exp(lam * tau)
    value = lam * lam * tau * tau * grow + a * kappa * tau * lam + kappa * kappa * beta
    slope = (2.0 * lam * tau * tau + lam * lam * tau ** 3) * grow + a * kappa * tau
    return value, slope


def _newton(seed: complex, p: ProtocolParams) -> complex:
    lam = complex(seed)
    value, slope = characteristic_function(lam, p)
    for _ in range(NEWTON_MAX_ITER):
        if slope == 0:
            break
        step = value / slope
        # Damped step near (double) roots where a full step overshoots.
        for _ in range(20):
            trial = lam - step
            trial_value, trial_slope = characteristic_function(trial, p)
            if abs(trial_value) <= abs(value) or not np.isfinite(abs(trial_value)):
                break
            step *= 0.5
        if not np.isfinite(abs(trial_value)):
            raise ConvergenceError(seed, "left the finite range")
        lam, value, slope = trial, trial_value, trial_slope
        if abs(step) <= NEWTON_STEP_TOL * max(1.0, abs(lam)):
            break
    if abs(value) >= NEWTON_RESIDUAL_TOL:
        raise ConvergenceError(seed, f"residual {abs(value):.3e} after {NEWTON_MAX_ITER} iterations")
    return lam


def _snap_real(lam: complex, p: ProtocolParams) -> complex:
    if lam.imag == 0.0 or abs(lam.imag) > REAL_ROOT_TOL * max(1.0, abs(lam)):
        return lam
    try:
        real_root = _newton(complex(lam.real, 0.0), p)
    except ConvergenceError:
        return lam
    return complex(real_root.real, 0.0)


# ---------------------------------------------------------------------------
# Spectral collocation
# ---------------------------------------------------------------------------

def cheb(n: int, span: float) -> Tuple[np.ndarray, np.ndarray]:
    """Chebyshev differentiation matrix and nodes on [-span, 0]."""
    if n == 0:
        return np.zeros((1, 1)), np.zeros(1)
    x = np.cos(np.pi * np.arange(n + 1) / n)
    nodes = span * (x - 1.0) / 2.0
    c = np.hstack([2.0, np.ones(n - 1), 2.0]) * (-1.0) ** np.arange(n + 1)
    grid = np.tile(nodes, (n + 1, 1)).T
    diff = grid - grid.T
    d = np.outer(c, 1.0 / c) / (diff + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return d, nodes


def _delay_matrices(p: ProtocolParams) -> Tuple[np.ndarray, np.ndarray]:
    a, beta, tau, kappa = p.a, p.beta, p.tau, p.kappa
    if beta == 0.0:
        return np.zeros((1, 1)), np.array([[-kappa * a / tau]])
    l0 = kappa * np.array([[0.0, -beta / (tau * tau)], [0.0, 0.0]])
    l1 = kappa * np.array([[-a / tau, 0.0], [1.0, 0.0]])
    return l0, l1


def generator_matrix(p: ProtocolParams, nodes: int) -> np.ndarray:
    """Collocated infinitesimal generator; its eigenvalues approximate the spectrum."""
    l0, l1 = _delay_matrices(p)
    dim = l0.shape[0]
    d, _ = cheb(nodes, p.tau)
    size = dim * (nodes + 1)
    generator = np.zeros((size, size))
    generator[dim:, :] = np.kron(d[1:], np.eye(dim))
    generator[:dim, :dim] = l0
    # The last node sits exactly at -tau, so the delayed term needs no interpolation.
    generator[:dim, dim * nodes:] += l1
    return generator


def _dedup(roots: Iterable[complex]) -> List[complex]:
    unique: List[complex] = []
    for lam in roots:
        if all(abs(lam - other) > DEDUP_TOL * max(1.0, abs(lam)) for other in unique):
            unique.append(lam)
    return unique


def _sorted_roots(roots: Iterable[complex]) -> List[complex]:
    return sorted(roots, key=lambda lam: (-lam.real, -lam.imag))


def _truncate(roots: Sequence[complex], n_roots: int) -> List[complex]:
    kept = list(roots[:n_roots])
    if kept and kept[-1].imag != 0.0 and len(roots) > n_roots:
        partner = kept[-1].conjugate()
        if not any(abs(lam - partner) <= DEDUP_TOL * max(1.0, abs(lam)) for lam in kept):
            kept.append(roots[n_roots])
    return kept


def _spectrum_at(p: ProtocolParams, n_roots: int, nodes: int) -> Spectrum:
    approx = eigvals(generator_matrix(p, nodes))
    approx = approx[np.isfinite(approx)]
    upper = _sorted_roots(complex(lam) for lam in approx if lam.imag >= -1e-12)
    seeds = upper[: 2 * n_roots + 4]

    refined: List[complex] = []
    dropped: List[complex] = []
    for seed in seeds:
        try:
            lam = _snap_real(_newton(seed, p), p)
        except ConvergenceError as exc:
            logger.debug("dropping seed: %s", exc)
            dropped.append(seed)
            continue
        refined.append(complex(lam.real, abs(lam.imag)))

    with_conjugates: List[complex] = []
    for lam in _dedup(refined):
        with_conjugates.append(lam)
        if lam.imag != 0.0:
            with_conjugates.append(lam.conjugate())
    roots = _truncate(_sorted_roots(_dedup(with_conjugates)), n_roots)
    residuals = [abs(characteristic_function(lam, p)[0]) for lam in roots]
    return Spectrum(roots=roots, residuals=residuals, method=SPECTRAL_METHOD, nodes=nodes, dropped_seeds=dropped)


def _leading_agree(first: Spectrum, second: Spectrum, n_roots: int) -> bool:
    if len(first) < n_roots or len(second) < n_roots:
        return False
    return all(
        abs(x - y) <= ROOT_STABILITY_TOL * max(1.0, abs(x))
        for x, y in zip(first.roots[:n_roots], second.roots[:n_roots])
    )


def rightmost_roots(
    p: ProtocolParams,
    n_roots: int = 4,
    nodes: int = SPECTRAL_NODES,
    adaptive: bool = True,
) -> Spectrum:
    """The ``n_roots`` rightmost characteristic roots of ``p``.

    With ``adaptive`` the collocation size is doubled until the leading roots
    agree between refinements.
    """
    validate_params(p)
    if isinstance(n_roots, bool) or not isinstance(n_roots, int) or n_roots < 1:
        raise DomainError("n_roots", f"must be an integer >= 1, got {n_roots!r}")
    if nodes < 2:
        raise DomainError("nodes", f"must be >= 2, got {nodes!r}")

    current = _spectrum_at(p, n_roots, nodes)
    if not adaptive:
        _require_roots(current, p)
        return current
    while nodes * 2 <= SPECTRAL_MAX_NODES:
        nodes *= 2
        refined = _spectrum_at(p, n_roots, nodes)
        if _leading_agree(current, refined, n_roots):
            current = refined
            break
        logger.debug("leading roots moved at %d nodes; refining", nodes)
        current = refined
    else:
        logger.warning("spectrum not stable at %d nodes for %s", nodes, p)
    _require_roots(current, p)
    return current


def _require_roots(spectrum: Spectrum, p: ProtocolParams) -> None:
    if not spectrum.roots:
        seed = spectrum.dropped_seeds[0] if spectrum.dropped_seeds else 0j
        raise ConvergenceError(seed, f"no root could be refined for {p}")


def max_real_part(p: ProtocolParams, nodes: int = SPECTRAL_NODES, adaptive: bool = True) -> float:
    return rightmost_roots(p, 1, nodes=nodes, adaptive=adaptive).max_real


def lambert_w_roots(p: ProtocolParams, branches: Sequence[int] = (0, 1, -1)) -> Spectrum:
    """Closed-form roots lam tau = W_k(-a kappa) of the beta = 0 equation."""
    validate_params(p)
    if p.beta != 0.0:
        raise DomainError("beta", "the Lambert-W oracle applies to beta = 0 only")
    roots = _sorted_roots(complex(lambertw(-p.a * p.kappa, k)) / p.tau for k in branches)
    residuals = [abs(characteristic_function(lam, p)[0]) for lam in roots]
    return Spectrum(roots=roots, residuals=residuals, method=LAMBERT_METHOD)


def crossing_kappa(p: ProtocolParams, lo: float, hi: float, xtol: float = 1e-10) -> float:
    """Bisect kappa in [lo, hi] for the rightmost root reaching Re = 0."""
    validate_params(p)

    def rightmost_real(kappa: float) -> float:
        return max_real_part(p.with_kappa(kappa))

    f_lo, f_hi = rightmost_real(lo), rightmost_real(hi)
    if f_lo * f_hi > 0.0:
        raise DomainError("kappa", f"no stability change between {lo!r} and {hi!r}")
    result = root_scalar(rightmost_real, bracket=(lo, hi), method="bisect", xtol=xtol)
    logger.debug("rightmost root crosses at kappa=%r after %d evaluations", result.root, result.function_calls)
    return float(result.root)
