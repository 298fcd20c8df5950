"""Test the Bayes risk lower bounds."""

import math
import unittest

from correlated_paths.bounds import (
    PSI_LIMIT,
    CriticalBracket,
    bayes_risk_estimate,
    bound_sweep,
    critical_psi,
    empirical_exp_moment,
    known_start_bound,
    lambda_psi,
    mixture_moment,
    monte_carlo_bound,
    moment_risk_bound,
    unknown_start_bound,
    vacuity_psi,
    xi,
)
from correlated_paths.choices import BoundRouteChoices, PriorChoices, RegimeChoices
from correlated_paths.exceptions import DomainError
from correlated_paths.graph import Path, TorusLattice
from correlated_paths.paths import EITFit, PathClass, PathSupport, PriorSampler, estimate_eit


def geometric_fit(eta=0.3, c0=1.0):
    """An EIT fit with a known envelope."""
    return EITFit(eta=eta, c0=c0, tail_table=(1.0, eta, eta**2), mc_trials=1000)


class TestClosedForms(unittest.TestCase):
    """Test class."""

    def test_lambda(self):
        self.assertEqual(lambda_psi(0.0), 0.0)
        self.assertAlmostEqual(lambda_psi(0.1), 4.0 / 9.0, places=15)
        self.assertEqual(lambda_psi(-0.05), lambda_psi(0.05))
        with self.assertRaises(DomainError):
            lambda_psi(PSI_LIMIT)

    def test_lambda_increases(self):
        values = [lambda_psi(psi) for psi in (0.0, 0.02, 0.05, 0.08, 0.1, 0.11)]
        self.assertEqual(values, sorted(values))
        self.assertGreater(lambda_psi(0.1111), 10.0)

    def test_xi(self):
        self.assertEqual(xi(0.0, 0.5, 3.0), 1.0)
        a, eta, c0 = 0.2, 0.4, 1.5
        growth = math.exp(a)
        expected = growth + c0 * (growth - 1) * growth * eta**2 / (1 - growth * eta)
        self.assertAlmostEqual(xi(a, eta, c0), expected)
        with self.assertRaises(DomainError):
            xi(1.0, 0.5, 1.0)
        with self.assertRaises(DomainError):
            xi(0.1, 1.0, 1.0)

    def test_moment_risk_bound(self):
        self.assertEqual(moment_risk_bound(0.05, 1.0), 1.0)
        self.assertAlmostEqual(moment_risk_bound(0.05, 2.0), 0.5)
        self.assertEqual(moment_risk_bound(0.05, 10.0), 0.0)
        with self.assertRaises(DomainError):
            moment_risk_bound(0.05, 0.5)
        with self.assertRaises(DomainError):
            moment_risk_bound(0.2, 1.5)


class TestBoundReports(unittest.TestCase):
    """Test class."""

    def test_known_start_bound(self):
        report = known_start_bound(0.05, geometric_fit())
        self.assertEqual(report.route, BoundRouteChoices.CLOSED_FORM)
        self.assertEqual(report.regime, RegimeChoices.KNOWN_START)
        self.assertAlmostEqual(report.exp_moment, xi(lambda_psi(0.05), 0.3, 1.0))
        self.assertAlmostEqual(report.risk_bound, 1.0 - 0.5 * math.sqrt(report.exp_moment - 1.0))
        self.assertTrue(report.criterion_met)
        self.assertFalse(report.vacuous)

    def test_vacuous_bound(self):
        report = known_start_bound(0.105, geometric_fit(eta=0.6))
        self.assertTrue(report.vacuous)
        self.assertIsNone(report.exp_moment)
        self.assertFalse(report.criterion_met)
        self.assertTrue(report.to_json()["vacuous"])

    def test_degenerate_fit(self):
        fit = EITFit(eta=None, c0=None, tail_table=(0.0, 0.0), mc_trials=1000, degenerate=True)
        report = known_start_bound(0.1, fit)
        self.assertEqual(report.route, BoundRouteChoices.EXACT)
        self.assertEqual(report.risk_bound, 1.0)

    def test_unknown_start_bound(self):
        fit = geometric_fit()
        report = unknown_start_bound(0.08, fit, 8)
        within = xi(lambda_psi(0.08), fit.eta, fit.c0)
        self.assertAlmostEqual(report.exp_moment, 1.0 + within / 8)
        self.assertEqual(report.blocks, 8)
        self.assertEqual(report.regime, RegimeChoices.UNKNOWN_START)
        self.assertGreaterEqual(report.risk_bound, known_start_bound(0.08, fit).risk_bound)
        if report.criterion_met:
            self.assertGreaterEqual(report.risk_bound, 1.0 - 0.5 * math.sqrt(2.0 / 8) - 1e-12)
        with self.assertRaises(DomainError):
            unknown_start_bound(0.08, fit, 0)

    def test_bound_sweep_is_monotone(self):
        reports = bound_sweep([0.08, 0.02, 0.05], geometric_fit())
        self.assertEqual([report.psi for report in reports], [0.02, 0.05, 0.08])
        bounds = [report.risk_bound for report in reports]
        self.assertEqual(bounds, sorted(bounds, reverse=True))

    def test_vacuity_and_critical_psi(self):
        fit = geometric_fit(eta=0.5, c0=2.0)
        ceiling = vacuity_psi(fit.eta)
        self.assertAlmostEqual(lambda_psi(ceiling), math.log(2.0), places=8)
        psi = critical_psi(fit)
        self.assertLess(psi, ceiling)
        self.assertAlmostEqual(xi(lambda_psi(psi), fit.eta, fit.c0), 2.0, places=6)
        self.assertEqual(vacuity_psi(None), PSI_LIMIT)

    def test_critical_bracket(self):
        bracket = CriticalBracket(bound_psi=0.05, risk_psi=0.9)
        self.assertTrue(bracket.is_nonempty)
        self.assertTrue(bracket.is_ordered)
        self.assertFalse(CriticalBracket(bound_psi=None, risk_psi=0.9).is_nonempty)
        self.assertEqual(bracket.to_json()["ordered"], True)


class TestMonteCarlo(unittest.TestCase):
    """Test class."""

    def test_exp_moment_at_zero(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(2, 8), 4, seed=2)
        estimate = empirical_exp_moment(sampler, 0.0, 1000)
        self.assertEqual(estimate.estimate, 1.0)
        self.assertEqual((estimate.ci_lo, estimate.ci_hi), (1.0, 1.0))

    def test_exp_moment_is_within_closed_form(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(3, 8), 5, seed=2)
        fit = estimate_eit(sampler, 5000)
        a = lambda_psi(0.05)
        estimate = empirical_exp_moment(sampler, a, 5000)
        self.assertLessEqual(estimate.ci_lo, estimate.estimate)
        self.assertLessEqual(estimate.estimate, estimate.ci_hi)
        self.assertLessEqual(estimate.ci_lo, xi(a, fit.eta, fit.c0))
        with self.assertRaises(DomainError):
            empirical_exp_moment(sampler, a, 10)

    def test_monte_carlo_bound(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(3, 8), 5, seed=2)
        report = monte_carlo_bound(0.05, sampler, 2000)
        self.assertEqual(report.route, BoundRouteChoices.MONTE_CARLO)
        self.assertEqual(report.regime, RegimeChoices.GENERIC)
        self.assertGreater(report.risk_bound, 0.5)

    def test_monte_carlo_bound_for_a_mixture(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(3, 8), 5, seed=2)
        plain = monte_carlo_bound(0.05, sampler, 2000)
        mixed = monte_carlo_bound(0.05, sampler, 2000, blocks=8)
        self.assertAlmostEqual(mixed.exp_moment, mixture_moment(plain.exp_moment, 8))
        self.assertEqual(mixed.regime, RegimeChoices.UNKNOWN_START)
        self.assertEqual(mixed.blocks, 8)
        self.assertGreater(mixed.risk_bound, plain.risk_bound)
        low, high = mixed.provenance["risk_ci"]
        self.assertLessEqual(low, mixed.risk_bound)
        self.assertLessEqual(mixed.risk_bound, high)

    def test_mixture_moment(self):
        self.assertEqual(mixture_moment(3.0), 3.0)
        self.assertEqual(mixture_moment(3.0, 1), 3.0)
        self.assertAlmostEqual(mixture_moment(3.0, 4), 1.5)

    def test_bayes_risk_with_a_strong_single_path(self):
        path_class = PathClass(TorusLattice(1, 16), 16, start=0, oriented=True)
        estimate = bayes_risk_estimate(path_class, 0.9, 2000, seed=5)
        self.assertLess(estimate.estimate, 0.2)
        self.assertGreaterEqual(estimate.ci_lo, 0.0)
        self.assertLessEqual(estimate.ci_hi, 1.0)

    def test_bayes_risk_at_zero_is_one(self):
        path_class = PathClass(TorusLattice(2, 5), 3, start=0, oriented=True)
        estimate = bayes_risk_estimate(path_class, 0.0, 50, seed=1)
        self.assertAlmostEqual(estimate.estimate, 1.0)

    def test_bayes_risk_dominates_the_bound(self):
        lattice = TorusLattice(2, 8)
        path_class = PathClass(lattice, 4, start=0, oriented=True)
        sampler = PriorSampler(PriorChoices.ORIENTED, lattice, 4, seed=3)
        bound = monte_carlo_bound(0.08, sampler, 5000)
        risk = bayes_risk_estimate(path_class, 0.08, 2000, seed=3)
        self.assertGreaterEqual(risk.ci_hi, bound.risk_bound)

    def test_bayes_risk_support_needs_lattice(self):
        support = PathSupport((Path((0, 1)),))
        with self.assertRaises(DomainError):
            bayes_risk_estimate(support, 0.5, 10)
        estimate = bayes_risk_estimate(support, 0.5, 100, lattice=TorusLattice(2, 5))
        self.assertLess(estimate.estimate, 1.0)
