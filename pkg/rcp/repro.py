"""Runnable reproduction checks behind ``main.py repro``.

Each check returns ``(passed, detail)``; :func:`run_checks` collects them in a
fixed order so the report is stable between runs.
"""
from __future__ import annotations

import logging
import math
import time
from typing import Callable, Dict, List, Tuple

import numpy as np

from config import HALF_PI, INV_E
from rcp.convergence import decay_rate_no_queue, decay_rate_with_queue
from rcp.entities import DIVERGED, SUB_CRITICAL, SUPER_CRITICAL, SUSTAINED_OSCILLATION, InitialCondition, ProtocolParams, SimConfig
from rcp.fluid import analyze_trajectory, power_law_exponent, simulate, tail_amplitude
from rcp.hopf import alpha_prime, hopf_report, lyapunov_c1, measured_amplitudes, re_c1_closed_form, theta_threshold
from rcp.model import equilibrium
from rcp.packet import queue_stats, run_packet_sim
from rcp.stability import crossing_kappa, hopf_kappa_c, is_locally_stable, max_real_part, rightmost_roots, transversality_sign
from scenario_catalog import load_scenario_catalog

logger = logging.getLogger(__name__)

CheckResult = Tuple[bool, str]

AMPLITUDE_OFFSETS = (0.01, 0.02, 0.04)


def check_kappa_c() -> CheckResult:
    kc = hopf_kappa_c(1.5, 0.1)
    crossed = crossing_kappa(ProtocolParams(a=1.5, beta=0.1, C=1.0, tau=1.0), 0.9, 1.1)
    ok = abs(kc - 1.0) <= 0.02 and abs(crossed - kc) <= 1e-6
    return ok, f"kappa_c={kc!r} bisected={crossed!r}"


def _check_hopf_case(a: float, beta: float, mu2: float, beta2: float, beta2_tol: float, kind: str) -> CheckResult:
    report = hopf_report(a, beta, 1.0, 1.0)
    ok = (
        abs(report.mu2 - mu2) <= 1e-3
        and abs(report.beta2 - beta2) <= beta2_tol
        and report.classification == kind
    )
    return ok, f"mu2={report.mu2!r} beta2={report.beta2!r} {report.classification}"


def check_hopf_subcritical() -> CheckResult:
    return _check_hopf_case(0.75, 0.518, -0.1263, 0.1775, 1e-3, SUB_CRITICAL)


def check_hopf_supercritical() -> CheckResult:
    # beta2 here is known to fewer digits than mu2.
    return _check_hopf_case(1.25, 0.454, 0.1054, -0.3068, 2.5e-3, SUPER_CRITICAL)


def check_theta_threshold() -> CheckResult:
    th = theta_threshold()
    below = re_c1_closed_form(th - 0.01, 1.0, 1.0)
    above = re_c1_closed_form(th + 0.01, 1.0, 1.0)
    ok = abs(th - 1.1297) <= 1e-3 and below * above < 0.0
    return ok, f"Theta_h={th!r}"


def check_fastest_decay() -> CheckResult:
    details = []
    ok = True
    for tau in (0.5, 1.0, 2.0):
        peak = decay_rate_no_queue(INV_E, tau).sigma
        near = max(decay_rate_no_queue(INV_E - 1e-4, tau).sigma, decay_rate_no_queue(INV_E + 1e-4, tau).sigma)
        ok &= abs(peak * tau - 1.0) <= 1e-9 and near < peak
        details.append(f"tau={tau!r}:sigma={peak!r}")
    edge = decay_rate_no_queue(HALF_PI, 1.0).sigma
    ok &= edge == 0.0
    return ok, " ".join(details) + f" sigma(pi/2)={edge!r}"


def check_beta_monotonic() -> CheckResult:
    sigmas = []
    ok = True
    for beta in (0.0, 0.1, 0.2):
        p = ProtocolParams(a=0.3, beta=beta, C=1.0, tau=1.0)
        sigmas.append(decay_rate_with_queue(p).sigma)
        ok &= max(rightmost_roots(p, 2).residuals) < 1e-10
    ok &= all(x > y for x, y in zip(sigmas, sigmas[1:]))
    for beta in (0.3, 0.4):
        p = ProtocolParams(a=0.3, beta=beta, C=1.0, tau=1.0)
        ok &= not is_locally_stable(p) and decay_rate_with_queue(p).sigma == 0.0
    return ok, "sigma=" + ",".join(repr(s) for s in sigmas)


def check_regime_boundary() -> CheckResult:
    below = rightmost_roots(ProtocolParams(a=INV_E - 0.01, beta=0.0, C=1.0, tau=1.0), 1).rightmost
    above = rightmost_roots(ProtocolParams(a=INV_E + 0.01, beta=0.0, C=1.0, tau=1.0), 1).rightmost
    return below.imag == 0.0 and above.imag != 0.0, f"below={below!r} above={above!r}"


def check_fluid_scenarios() -> CheckResult:
    catalog = load_scenario_catalog()
    results: Dict[str, str] = {}
    stable = catalog["low-beta-stable"]
    traj = simulate(stable.params(), stable.initial_condition(), stable.sim_config())
    final_error = abs(traj.R_values[-1] - stable.C)
    for key in ("low-beta-cycle", "subcritical-blowup"):
        scenario = catalog[key]
        run = simulate(scenario.params(), scenario.initial_condition(), scenario.sim_config())
        results[key] = analyze_trajectory(run, equilibrium(scenario.params())).kind
    ok = (
        not traj.diverged
        and final_error < 1e-3
        and results["low-beta-cycle"] == SUSTAINED_OSCILLATION
        and results["subcritical-blowup"] == DIVERGED
    )
    return ok, f"low-beta-stable error={final_error!r} " + " ".join(f"{k}={v}" for k, v in results.items())


def check_amplitude_law() -> CheckResult:
    rows = measured_amplitudes(HALF_PI, 1.0, 1.0, AMPLITUDE_OFFSETS)
    measured = {offset: value for _, offset, _, value in rows}
    ratio = measured[0.04] / measured[0.01]
    exponent = power_law_exponent([r[1] for r in rows], [r[3] for r in rows])
    ok = abs(ratio - 2.0) <= 0.2 and abs(exponent - 0.5) <= 0.05
    return ok, f"ratio={ratio!r} exponent={exponent!r}"


def check_stability_grid(points: int = 20) -> CheckResult:
    mismatches = 0
    compared = 0
    for a in np.linspace(0.05, 1.5, points):
        for beta in np.linspace(0.0, 1.0, points):
            a, beta = float(a), float(beta)
            if abs(hopf_kappa_c(a, beta) - 1.0) < 1e-3:
                continue
            p = ProtocolParams(a=a, beta=beta, C=1.0, tau=1.0)
            compared += 1
            if is_locally_stable(p) != (max_real_part(p) < 0.0):
                mismatches += 1
                logger.warning("stability mismatch at a=%r beta=%r", a, beta)
    return mismatches == 0, f"compared={compared} mismatches={mismatches}"


def check_packet_scenarios() -> CheckResult:
    catalog = load_scenario_catalog()
    no_feedback = queue_stats(run_packet_sim(catalog["packet-no-queue-feedback"].packet_config()))
    with_feedback = queue_stats(run_packet_sim(catalog["packet-queue-feedback"].packet_config()))
    sub = tail_amplitude(run_packet_sim(catalog["packet-subcritical"].packet_config()).queue_lengths)[0]
    sup = tail_amplitude(run_packet_sim(catalog["packet-supercritical"].packet_config()).queue_lengths)[0]
    ratio = sub / sup if sup > 0 else math.inf
    ok = not no_feedback.oscillating and with_feedback.oscillating and ratio >= 3.0
    return ok, f"no_feedback={no_feedback.oscillating} with_feedback={with_feedback.oscillating} sub/super ratio={ratio!r}"


def check_algebra_guards() -> CheckResult:
    thetas = np.linspace(0.2, HALF_PI, 15)
    for big_theta in thetas:
        lyapunov_c1(float(big_theta), 1.0, 1.0)
        if not alpha_prime(float(big_theta), 1.0, 1.0) > 0.0:
            return False, f"alpha' not positive at Theta={big_theta!r}"
    for a, beta in ((0.75, 0.518), (1.25, 0.454), (1.5, 0.1)):
        hopf_report(a, beta, 1.0, 1.0)
    for a in np.linspace(0.1, 1.5, 10):
        for beta in np.linspace(0.0, 1.0, 10):
            if transversality_sign(float(a), float(beta)) != 1:
                return False, f"transversality failed at a={a!r} beta={beta!r}"
    return True, f"Theta grid={len(thetas)} transversality grid=100"


def integrator_error_ratio() -> float:
    p = ProtocolParams(a=0.3, beta=0.1, C=1.0, tau=1.0, kappa=0.9)
    ic = InitialCondition(R0=1.2)

    def end_state(m: int) -> np.ndarray:
        traj = simulate(p, ic, SimConfig(horizon=10.0, steps_per_delay=m))
        return np.array([traj.R_values[-1], traj.q_values[-1]])

    reference = end_state(256)
    coarse = np.max(np.abs(end_state(8) - reference))
    fine = np.max(np.abs(end_state(16) - reference))
    return float(coarse / fine)


def check_integrator_order() -> CheckResult:
    ratio = integrator_error_ratio()
    return ratio >= 8.0, f"error ratio={ratio!r}"


CHECKS: List[Tuple[str, Callable[[], CheckResult]]] = [
    ("kappa_c", check_kappa_c),
    ("hopf_subcritical", check_hopf_subcritical),
    ("hopf_supercritical", check_hopf_supercritical),
    ("theta_threshold", check_theta_threshold),
    ("fastest_decay", check_fastest_decay),
    ("beta_monotonic", check_beta_monotonic),
    ("regime_boundary", check_regime_boundary),
    ("fluid_scenarios", check_fluid_scenarios),
    ("amplitude_law", check_amplitude_law),
    ("stability_grid", check_stability_grid),
    ("packet_scenarios", check_packet_scenarios),
    ("algebra_guards", check_algebra_guards),
    ("integrator_order", check_integrator_order),
]


def run_checks() -> List[Tuple[str, bool, str, float]]:
    """Run every check; an exception counts as a failure with its message."""
    results = []
    for name, check in CHECKS:
        started = time.perf_counter()
        try:
            passed, detail = check()
        except Exception as exc:  # noqa: BLE001 - report, keep going
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - started
        logger.info("%s %s in %.2fs", name, "passed" if passed else "FAILED", elapsed)
        results.append((name, bool(passed), detail, elapsed))
    return results
