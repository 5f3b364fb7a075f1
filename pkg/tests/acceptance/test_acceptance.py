"""
Full-scale Monte Carlo checks of the detector. They take minutes, so they
only run with CONFOUNDVERSE_SLOW_TESTS=1.

The single-environment outcome is Y = T^2 + T - e1 + e2 once T is
substituted, so its regression on Z stays inside the span of the default
polynomial basis at every rho. These checks therefore assert level control,
calibration and the trend of the detection rate, not a power level.
"""

import os
import unittest

from confoundverse import datagen
from confoundverse import evalharness
from confoundverse.estimator import RidgeConfig
from confoundverse.oracle import monte_carlo_null_calibration, oracle_agreement


SLOW = os.environ.get('CONFOUNDVERSE_SLOW_TESTS') == '1'


def _sweep(rho_values, repeats, lam=1e-8) -> evalharness.SweepConfig:
    return evalharness.SweepConfig(
        rho_values=rho_values,
        repeats=repeats,
        sample_size=1000,
        ridge=RidgeConfig(P=40, lam=lam),
    )


@unittest.skipUnless(SLOW, 'set CONFOUNDVERSE_SLOW_TESTS=1 to run')
class TestAcceptance(unittest.TestCase):

    def test_closed_forms_match_oracle(self):
        report = oracle_agreement(instances=20)
        self.assertTrue(report.converged)
        self.assertLess(report.max_coord_error, 1e-6)

    def test_type_one_error(self):
        report = evalharness.detection_rate_sweep(_sweep((0.0,), 200))
        self.assertLessEqual(report.detection_rate[0.0], 0.08)

    def test_type_one_error_at_tiny_lambda(self):
        """
        P = 40 polynomial rows have rank 15; lambda = 1e-12 must not turn the
        unused directions into rejections.
        """
        report = evalharness.detection_rate_sweep(_sweep((0.0,), 40, lam=1e-12))
        self.assertLessEqual(report.detection_rate[0.0], 0.08)

    def test_detection_rate_does_not_fall_with_rho(self):
        rhos = (0.0, 0.5, 1.0, 2.0)
        report = evalharness.detection_rate_sweep(_sweep(rhos, 40))
        for weaker, stronger in zip(rhos, rhos[1:]):
            self.assertGreaterEqual(report.detection_rate[stronger],
                                    report.detection_rate[weaker] - 0.05)

    def test_null_z_calibration(self):
        report = monte_carlo_null_calibration(
            RidgeConfig(P=40), datagen.ScenarioConfig(rho=0.0, N=2000), repeats=200,
        )
        self.assertLessEqual(report.rejection_rate, 0.08)
        self.assertTrue(-0.15 <= report.z_mean <= 0.15)
        self.assertTrue(0.7 <= report.z_var <= 1.3)

    def test_runtime_grows_quadratically_in_n(self):
        table = evalharness.runtime_scaling([500, 1000, 2000, 4000], [40], d=3)
        self.assertTrue(1.6 <= table.n_slope <= 2.4)
