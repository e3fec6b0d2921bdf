import unittest

import numpy as np
import pytest
from scipy.special import lambertw

from config import HALF_PI, INV_E
from rcp.convergence import (
    RIGHTMOST,
    SIGMA1,
    SIGMA2,
    SIGMA3,
    classify_regime,
    decay_rate_no_queue,
    decay_rate_with_queue,
    g_of_u,
    non_oscillatory,
)
from rcp.entities import NON_OSCILLATORY, OSCILLATORY, UNSTABLE, ProtocolParams
from rcp.errors import DomainError
from rcp.stability import rightmost_roots


class TestDecayRateWithoutQueue(unittest.TestCase):
    """Case analysis for the rate-mismatch-only model."""

    def test_peak_rate_at_inverse_e(self):
        for tau in (0.5, 1.0, 2.0):
            report = decay_rate_no_queue(INV_E, tau)
            self.assertAlmostEqual(1.0 / tau, report.sigma, places=12)
            self.assertEqual(SIGMA1, report.binding_branch)
            for a in (INV_E - 1e-4, INV_E + 1e-4):
                self.assertLess(decay_rate_no_queue(a, tau).sigma, report.sigma)

    def test_zero_rate_at_half_pi(self):
        report = decay_rate_no_queue(HALF_PI, 1.0)
        self.assertEqual(0.0, report.sigma)
        self.assertEqual(UNSTABLE, report.regime)

    def test_overdamped_branch(self):
        report = decay_rate_no_queue(0.2, 1.0)
        self.assertAlmostEqual(0.2592, report.sigma, delta=1e-4)
        self.assertEqual(SIGMA2, report.binding_branch)
        self.assertEqual(NON_OSCILLATORY, report.regime)

    def test_underdamped_branch(self):
        self.assertAlmostEqual(0.565, decay_rate_no_queue(0.7, 1.0).sigma, delta=2e-3)
        report = decay_rate_no_queue(1.2, 1.0)
        self.assertAlmostEqual(0.19, report.sigma, delta=0.01)
        self.assertEqual(SIGMA3, report.binding_branch)
        self.assertEqual(OSCILLATORY, report.regime)

    def test_rate_scales_inversely_with_tau(self):
        self.assertAlmostEqual(
            decay_rate_no_queue(0.9, 1.0).sigma / 4.0,
            decay_rate_no_queue(0.9, 4.0).sigma,
            places=12,
        )


@pytest.mark.parametrize("a", [0.1, 0.2, 0.7, 1.2, 1.5])
def test_case_analysis_matches_principal_lambert_branch(a):
    expected = -lambertw(-a, 0).real
    assert decay_rate_no_queue(a, 1.0).sigma == pytest.approx(expected, abs=1e-8)


def test_g_of_u_limits():
    assert g_of_u(1e-9) == pytest.approx(INV_E, rel=1e-12)
    assert g_of_u(HALF_PI) == pytest.approx(HALF_PI, rel=1e-12)


def test_sigma_decreases_with_queue_gain():
    sigmas = []
    for beta in (0.0, 0.1, 0.2):
        p = ProtocolParams(a=0.3, beta=beta, C=1.0, tau=1.0)
        report = decay_rate_with_queue(p)
        assert report.binding_branch == RIGHTMOST
        assert max(rightmost_roots(p, 2).residuals) < 1e-10
        sigmas.append(report.sigma)
    assert sigmas[0] == pytest.approx(0.4894, abs=1e-3)
    assert sigmas[0] > sigmas[1] > sigmas[2] > 0.0


@pytest.mark.parametrize("beta", [0.3, 0.4])
def test_unstable_queue_gain_reports_zero_rate(beta):
    report = decay_rate_with_queue(ProtocolParams(a=0.3, beta=beta, C=1.0, tau=1.0))
    assert report.sigma == 0.0
    assert report.regime == UNSTABLE


def test_with_queue_regime_follows_rightmost_root():
    oscillating = decay_rate_with_queue(ProtocolParams(a=1.0, beta=0.5, C=1.0, tau=1.0))
    assert oscillating.regime == OSCILLATORY
    assert oscillating.sigma > 0.0


def test_regime_classification():
    assert non_oscillatory(0.3)
    assert not non_oscillatory(0.4)
    assert classify_regime(INV_E) == NON_OSCILLATORY
    assert classify_regime(1.0) == OSCILLATORY
    assert classify_regime(HALF_PI) == UNSTABLE


def test_rejects_non_positive_gain():
    with pytest.raises(DomainError, match="^a: "):
        decay_rate_no_queue(0.0, 1.0)
    with pytest.raises(DomainError, match="^tau: "):
        decay_rate_no_queue(0.5, -1.0)


def test_rate_rises_to_inverse_e_then_falls():
    rising = [decay_rate_no_queue(float(a), 1.0).sigma for a in np.linspace(0.01, INV_E, 50)]
    falling = [decay_rate_no_queue(float(a), 1.0).sigma for a in np.linspace(INV_E, HALF_PI, 50)]
    assert np.all(np.diff(rising) > 0.0)
    assert np.all(np.diff(falling) < 0.0)
    assert falling[-1] == 0.0


@pytest.mark.parametrize("a", np.linspace(0.05, 1.5, 15))
def test_queue_free_rate_agrees_with_rightmost_root(a):
    a = float(a)
    closed = decay_rate_no_queue(a, 1.0).sigma
    spectral = decay_rate_with_queue(ProtocolParams(a=a, beta=0.0, C=1.0, tau=1.0)).sigma
    assert abs(closed - spectral) < 1e-6


@pytest.mark.parametrize("a", [round(0.05 * k, 2) for k in range(1, 32)])
def test_non_oscillatory_iff_rightmost_root_is_real(a):
    rightmost = rightmost_roots(ProtocolParams(a=a, beta=0.0, C=1.0, tau=1.0), 1).rightmost
    assert non_oscillatory(a) == (rightmost.imag == 0.0)
