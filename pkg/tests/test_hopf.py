import cmath
import math
import unittest

import numpy as np
import pytest

from config import HALF_PI
from rcp.entities import SUB_CRITICAL, SUPER_CRITICAL
from rcp.errors import DomainError
from rcp.fluid import power_law_exponent
from rcp.hopf import (
    AMPLITUDE_CONSTANT,
    alpha_prime,
    amplitude_no_queue,
    c1_closed_form,
    hopf_report,
    hopf_sweep,
    lyapunov_c1,
    measured_amplitudes,
    omega0_at_hopf,
    re_c1_closed_form,
    theta_threshold,
)
from rcp.stability import hopf_kappa_c


class TestWorkedCases(unittest.TestCase):
    """Criticality of the two worked Hopf examples on a unit link."""

    def test_subcritical_case(self):
        report = hopf_report(0.75, 0.518, 1.0, 1.0)
        self.assertAlmostEqual(-0.1263, report.mu2, delta=1e-3)
        self.assertAlmostEqual(0.1775, report.beta2, delta=1e-3)
        self.assertEqual(SUB_CRITICAL, report.classification)
        self.assertAlmostEqual(0.9336, report.Theta, delta=1e-3)
        self.assertAlmostEqual(1.0005, report.kappa_c, delta=1e-3)

    def test_supercritical_case(self):
        report = hopf_report(1.25, 0.454, 1.0, 1.0)
        self.assertAlmostEqual(0.1054, report.mu2, delta=1e-3)
        # beta2 here is known to fewer digits than mu2.
        self.assertAlmostEqual(-0.3068, report.beta2, delta=2.5e-3)
        self.assertEqual(SUPER_CRITICAL, report.classification)

    def test_report_lines_are_key_value(self):
        lines = hopf_report(0.75, 0.518, 1.0, 1.0).as_lines()
        keys = [line.split("=", 1)[0] for line in lines]
        for key in ("omega0", "Theta", "kappa_c", "c1_re", "mu2", "beta2", "classification", "g21", "A1"):
            self.assertIn(key, keys)


class TestCenterManifoldGuards(unittest.TestCase):
    """Internal identities that the two c1 paths rely on."""

    def setUp(self):
        self.report = hopf_report(0.8, 0.55, 1.0, 1.0)
        self.parts = self.report.intermediates

    def test_g11_vanishes(self):
        self.assertLess(abs(self.parts.g11), 1e-12)

    def test_g02_mirrors_g20(self):
        omega0 = self.report.omega0
        expected = 2j * self.parts.Omega.conjugate() * omega0
        self.assertLess(abs(self.parts.g20 - expected), 1e-10)
        self.assertLess(abs(self.parts.g02 + self.parts.g20), 1e-12)

    def test_omega_closed_form(self):
        big_theta = self.report.Theta
        s = 3.0 + 2j * big_theta + cmath.exp(-2j * big_theta)
        self.assertLess(abs(self.parts.Omega.conjugate() - 2.0 / s), 1e-10)

    def test_c1_assembles_from_g_coefficients(self):
        omega0 = self.report.omega0
        assembled = -1j * abs(self.parts.g02) ** 2 / (6.0 * omega0) + self.parts.g21 / 2.0
        self.assertLess(abs(assembled - self.report.c1), 1e-7 * abs(self.report.c1))


def test_c1_paths_agree_across_theta_grid():
    for big_theta in np.linspace(0.2, HALF_PI, 25):
        c1 = lyapunov_c1(float(big_theta), 1.0, 1.0)
        closed = c1_closed_form(float(big_theta), 1.0, 1.0)
        assert abs(c1 - closed) <= 1e-8 * abs(closed)
        assert alpha_prime(float(big_theta), 1.0, 1.0) > 0.0


def test_c1_scaling_in_capacity_and_rtt():
    base = lyapunov_c1(1.0, 1.0, 1.0)
    assert lyapunov_c1(1.0, 2.0, 1.0) == pytest.approx(base / 4.0, rel=1e-12)
    assert lyapunov_c1(1.0, 1.0, 3.0) == pytest.approx(base / 3.0, rel=1e-12)


def test_threshold_theta():
    th = theta_threshold()
    assert th == pytest.approx(1.1297, abs=1e-3)
    assert re_c1_closed_form(th - 0.01, 1.0, 1.0) > 0.0 > re_c1_closed_form(th + 0.01, 1.0, 1.0)


def test_sweep_switches_classification_at_threshold():
    rows = hopf_sweep([0.9, 1.0, 1.3, 1.5])
    assert [row[3] for row in rows] == [SUB_CRITICAL, SUB_CRITICAL, SUPER_CRITICAL, SUPER_CRITICAL]
    for big_theta, mu2, beta2, _ in rows:
        assert beta2 == pytest.approx(2.0 * re_c1_closed_form(big_theta, 1.0, 1.0))
        assert mu2 * beta2 < 0.0


def test_omega0_requires_point_on_surface():
    kc = hopf_kappa_c(0.75, 0.518)
    assert omega0_at_hopf(0.75, 0.518, kc, 1.0) == pytest.approx(0.9336, abs=1e-3)
    with pytest.raises(DomainError, match="kappa"):
        omega0_at_hopf(0.75, 0.518, 1.1, 1.0)


def test_domain_guards():
    with pytest.raises(DomainError, match="Theta"):
        lyapunov_c1(0.0, 1.0, 1.0)
    with pytest.raises(DomainError, match="Theta"):
        alpha_prime(2.0, 1.0, 1.0)
    with pytest.raises(DomainError, match="beta"):
        hopf_report(1.0, 0.0, 1.0, 1.0)


def test_amplitude_formula():
    assert AMPLITUDE_CONSTANT == pytest.approx(20.0 * math.pi / (3.0 * math.pi - 2.0))
    assert amplitude_no_queue(1.04, 1.0, 2.0) == pytest.approx(2.0 * math.sqrt(AMPLITUDE_CONSTANT * 0.04))
    assert amplitude_no_queue(1.0, 1.0, 1.0) == 0.0
    with pytest.raises(DomainError, match="kappa"):
        amplitude_no_queue(0.9, 1.0, 1.0)


def test_simulated_amplitudes_follow_square_root_law():
    rows = measured_amplitudes(HALF_PI, 1.0, 1.0, (0.01, 0.02, 0.04))
    measured = {offset: value for _, offset, _, value in rows}
    assert measured[0.04] / measured[0.01] == pytest.approx(2.0, rel=0.1)
    exponent = power_law_exponent([row[1] for row in rows], [row[3] for row in rows])
    assert exponent == pytest.approx(0.5, abs=0.05)
