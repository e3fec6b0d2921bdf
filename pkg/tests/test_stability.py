import math
import unittest

import numpy as np
import pytest

from config import HALF_PI, INV_E
from rcp.entities import ProtocolParams
from rcp.errors import DomainError
from rcp.hopf import alpha_prime
from rcp.repro import check_stability_grid
from rcp.stability import (
    LAMBERT_METHOD,
    SPECTRAL_METHOD,
    characteristic_function,
    crossing_kappa,
    crossing_speed,
    hopf_kappa_c,
    is_locally_stable,
    lambert_w_roots,
    max_real_part,
    rightmost_roots,
    stability_boundary_beta,
    theta,
    transversality_sign,
)


class TestClosedFormConditions(unittest.TestCase):
    """theta, kappa_c and the stability boundary from their closed forms."""

    def test_theta_reduces_to_a_without_queue_feedback(self):
        self.assertEqual(0.7, theta(0.7, 0.0).theta)

    def test_theta_solves_the_frequency_equation(self):
        th = theta(0.75, 0.518).theta
        self.assertAlmostEqual(0.0, th ** 4 - 0.75 ** 2 * th ** 2 - 0.518 ** 2, places=12)

    def test_kappa_c_for_the_phase_portrait_case(self):
        kc = hopf_kappa_c(1.5, 0.1)
        self.assertAlmostEqual(1.016618, kc, delta=1e-5)
        self.assertLessEqual(abs(kc - 1.0), 0.02)

    def test_kappa_c_without_queue_feedback(self):
        self.assertAlmostEqual(math.pi / 2.0, hopf_kappa_c(1.0, 0.0), places=15)
        self.assertAlmostEqual(1.0, hopf_kappa_c(HALF_PI, 0.0), places=15)

    def test_boundary_beta_puts_kappa_c_at_one(self):
        beta = stability_boundary_beta(0.5)
        self.assertAlmostEqual(0.405, beta, delta=1e-3)
        self.assertAlmostEqual(1.0, hopf_kappa_c(0.5, beta), places=9)

    def test_boundary_undefined_past_half_pi(self):
        with self.assertRaises(DomainError):
            stability_boundary_beta(1.6)

    def test_stability_flips_across_kappa_c(self):
        p = ProtocolParams(a=1.5, beta=0.1, C=1.0, tau=1.0)
        kc = hopf_kappa_c(1.5, 0.1)
        self.assertTrue(is_locally_stable(p.with_kappa(kc - 1e-6)))
        self.assertFalse(is_locally_stable(p.with_kappa(kc + 1e-6)))


class TestRightmostRoots(unittest.TestCase):
    """Spectral seeding plus Newton refinement on the exact characteristic function."""

    def test_roots_are_refined_and_sorted(self):
        spectrum = rightmost_roots(ProtocolParams(a=0.75, beta=0.518, C=1.0, tau=1.0), 4)
        self.assertEqual(SPECTRAL_METHOD, spectrum.method)
        self.assertGreaterEqual(len(spectrum), 4)
        self.assertTrue(all(res < 1e-10 for res in spectrum.residuals))
        reals = [lam.real for lam in spectrum.roots]
        self.assertEqual(sorted(reals, reverse=True), reals)

    def test_complex_roots_come_in_conjugate_pairs(self):
        spectrum = rightmost_roots(ProtocolParams(a=1.2, beta=0.0, C=1.0, tau=1.0), 2)
        top = spectrum.roots[0]
        self.assertGreater(top.imag, 0.0)
        self.assertTrue(any(abs(lam - top.conjugate()) < 1e-9 for lam in spectrum.roots))

    def test_matches_lambert_oracle_without_queue(self):
        p = ProtocolParams(a=1.0, beta=0.0, C=1.0, tau=2.0)
        spectral = rightmost_roots(p, 2)
        oracle = lambert_w_roots(p)
        self.assertEqual(LAMBERT_METHOD, oracle.method)
        self.assertLess(abs(spectral.rightmost - oracle.rightmost), 1e-8)

    def test_imaginary_axis_root_at_kappa_c(self):
        kc = hopf_kappa_c(0.8, 0.55)
        p = ProtocolParams(a=0.8, beta=0.55, C=1.0, tau=1.0, kappa=kc)
        lam = 1j * kc * theta(0.8, 0.55).theta
        self.assertLess(abs(characteristic_function(lam, p)[0]), 1e-12)
        self.assertAlmostEqual(0.0, max_real_part(p), places=8)


def test_lambert_oracle_rejects_queue_feedback(low_beta_params):
    with pytest.raises(DomainError, match="beta"):
        lambert_w_roots(low_beta_params)


def test_rightmost_roots_rejects_bad_count(low_beta_params):
    with pytest.raises(DomainError, match="n_roots"):
        rightmost_roots(low_beta_params, 0)


def test_bisected_crossing_matches_closed_form(low_beta_params):
    crossed = crossing_kappa(low_beta_params, 0.9, 1.1)
    assert abs(crossed - hopf_kappa_c(1.5, 0.1)) <= 1e-6


def test_regime_boundary_at_inverse_e():
    below = rightmost_roots(ProtocolParams(a=INV_E - 0.01, beta=0.0, C=1.0, tau=1.0), 1).rightmost
    above = rightmost_roots(ProtocolParams(a=INV_E + 0.01, beta=0.0, C=1.0, tau=1.0), 1).rightmost
    assert below.imag == 0.0
    assert above.imag != 0.0


def test_transversality_positive_on_grid():
    for a in np.linspace(0.1, 1.5, 10):
        for beta in np.linspace(0.0, 1.0, 10):
            assert transversality_sign(float(a), float(beta)) == 1


def test_crossing_speed_matches_finite_difference(low_beta_params):
    kc = hopf_kappa_c(1.5, 0.1)
    step = 1e-5
    slope = (max_real_part(low_beta_params.with_kappa(kc + step)) - max_real_part(low_beta_params.with_kappa(kc - step))) / (2 * step)
    assert slope == pytest.approx(crossing_speed(1.5, 0.1), rel=1e-4)


def test_crossing_speed_equals_alpha_prime_at_quarter_pi():
    big_theta = math.pi / 4.0
    a = big_theta * math.sin(big_theta)
    beta = big_theta ** 2 * math.cos(big_theta)
    assert hopf_kappa_c(a, beta) == pytest.approx(1.0, abs=1e-12)
    assert crossing_speed(a, beta) == pytest.approx(alpha_prime(big_theta, 1.0, 1.0), rel=1e-9)


def test_closed_form_stability_agrees_with_spectrum_on_grid():
    passed, detail = check_stability_grid(20)
    assert passed, detail


@pytest.mark.parametrize("a", [0.2, 1.0, 1.4])
def test_two_rightmost_roots_match_principal_and_first_lambert_branches(a):
    def order(z):
        return (round(z.real, 6), z.imag)

    p = ProtocolParams(a=a, beta=0.0, C=1.0, tau=1.0)
    oracle = sorted(lambert_w_roots(p, branches=(0, -1)).roots, key=order)
    spectral = sorted(rightmost_roots(p, 2).roots[:2], key=order)
    assert len(spectral) == 2
    for expected, found in zip(oracle, spectral):
        assert abs(expected - found) < 1e-8
