"""Test path classes, counting, enumeration and priors."""

import math
import os
import tempfile
import unittest

import numpy as np

from correlated_paths.choices import PriorChoices, StartChoices
from correlated_paths.exceptions import BudgetExceededError, DomainError, FitError
from correlated_paths.graph import Path, TorusLattice, is_valid_path
from correlated_paths.paths import (
    EITFit,
    PathClass,
    PathSupport,
    PriorSampler,
    as_support,
    count_bound,
    count_paths,
    enumerate_path_array,
    enumerate_paths,
    estimate_eit,
    fit_envelope,
    hypercube_blocks,
    hypercube_centers,
    log_cardinality,
    sample_class_paths,
    sample_prior,
)


class TestPathClass(unittest.TestCase):
    """Test class."""

    def test_known_start(self):
        lattice = TorusLattice(2, 5)
        path_class = PathClass(lattice, 3, start=0)
        self.assertTrue(path_class.known_start)
        self.assertEqual(path_class.start_kind, StartChoices.KNOWN)
        self.assertEqual(tuple(path_class.starts()), (0,))
        unknown = PathClass(lattice, 3)
        self.assertEqual(unknown.start_kind, StartChoices.UNKNOWN)
        self.assertEqual(len(unknown.starts()), lattice.n)

    def test_invalid_class(self):
        lattice = TorusLattice(2, 5)
        with self.assertRaises(DomainError):
            PathClass(lattice, 1)
        with self.assertRaises(DomainError):
            PathClass(lattice, 3, start=25)

    def test_contains(self):
        path_class = PathClass(TorusLattice(2, 5), 3, start=0, oriented=True)
        self.assertTrue(path_class.contains(Path((0, 1, 6))))
        self.assertFalse(path_class.contains(Path((0, 1))))
        self.assertFalse(path_class.contains(Path((1, 2, 3))))
        self.assertFalse(path_class.contains(Path((0, 4, 9))))


class TestCounting(unittest.TestCase):
    """Test class."""

    def test_small_known_start_counts(self):
        test_cases = [
            ((2, 5, 2, False), 4),
            ((2, 5, 3, False), 12),
            ((2, 5, 4, False), 36),
            ((2, 5, 3, True), 4),
            ((3, 5, 3, True), 9),
        ]
        for (d, m, k, oriented), expected in test_cases:
            with self.subTest(d=d, m=m, k=k, oriented=oriented):
                count = count_paths(PathClass(TorusLattice(d, m), k, start=0, oriented=oriented))
                self.assertTrue(count.exact)
                self.assertEqual(count.value, expected)

    def test_square_lattice_walks(self):
        # Self-avoiding walks on Z^2 of 4 steps number 100; m = 9 is wide enough to avoid wrap effects
        count = count_paths(PathClass(TorusLattice(2, 9), 5, start=0))
        self.assertEqual(count.value, 100)

    def test_unknown_start_multiplies_by_n(self):
        lattice = TorusLattice(2, 5)
        known = count_paths(PathClass(lattice, 3, start=0)).value
        unknown = count_paths(PathClass(lattice, 3)).value
        self.assertEqual(unknown, lattice.n * known)

    def test_count_matches_enumeration(self):
        test_cases = [(2, 4, 4, False), (2, 5, 5, False), (3, 3, 3, False), (2, 3, 3, True)]
        for d, m, k, oriented in test_cases:
            with self.subTest(d=d, m=m, k=k, oriented=oriented):
                path_class = PathClass(TorusLattice(d, m), k, start=0, oriented=oriented)
                paths = list(enumerate_paths(path_class))
                self.assertEqual(len(paths), count_paths(path_class).value)
                self.assertEqual(len(set(paths)), len(paths))
                self.assertTrue(all(path_class.contains(p) for p in paths))

    def test_over_budget_count_is_a_bound(self):
        path_class = PathClass(TorusLattice(2, 5), 6, start=0)
        count = count_paths(path_class, budget=10)
        self.assertFalse(count.exact)
        self.assertEqual(count.value, count_bound(path_class))
        self.assertAlmostEqual(log_cardinality(path_class, budget=10), 5 * math.log(4))

    def test_log_cardinality(self):
        path_class = PathClass(TorusLattice(3, 12), 5, start=0, oriented=True)
        self.assertAlmostEqual(log_cardinality(path_class), 4 * math.log(3))


class TestEnumeration(unittest.TestCase):
    """Test class."""

    def test_lexicographic_order(self):
        path_class = PathClass(TorusLattice(2, 5), 3, start=0)
        paths = [p.nodes for p in enumerate_paths(path_class)]
        self.assertEqual(paths, sorted(paths))
        self.assertEqual(paths[0], (0, 1, 2))

    def test_budget_refused(self):
        path_class = PathClass(TorusLattice(2, 5), 6)
        with self.assertRaises(BudgetExceededError) as context:
            list(enumerate_paths(path_class, budget=100))
        self.assertEqual(context.exception.budget, 100)
        self.assertEqual(context.exception.bound, count_bound(path_class))

    def test_path_array(self):
        path_class = PathClass(TorusLattice(2, 5), 3, start=0, oriented=True)
        array = enumerate_path_array(path_class)
        self.assertEqual(array.shape, (4, 3))
        self.assertEqual(array.dtype, np.int64)

    def test_as_support(self):
        path_class = PathClass(TorusLattice(2, 5), 3, start=0, oriented=True)
        support = as_support(path_class)
        self.assertEqual(len(support.paths), 4)
        self.assertAlmostEqual(sum(support.weights), 1.0)
        self.assertEqual(as_support(Path((0, 1))).k, 2)

    def test_support_rejects_bad_weights(self):
        with self.assertRaises(DomainError):
            PathSupport((Path((0, 1)), Path((0, 5))), weights=(0.7, 0.7))
        with self.assertRaises(DomainError):
            PathSupport((Path((0, 1)), Path((0, 5, 10))))


class TestPriors(unittest.TestCase):
    """Test class."""

    def test_hypercube_layout(self):
        lattice = TorusLattice(3, 12)
        self.assertEqual(hypercube_blocks(lattice, 3), 8)
        centers = hypercube_centers(lattice, 3)
        self.assertEqual(len(centers), 8)
        self.assertEqual(lattice.decode(centers[0]), (2, 2, 2))
        self.assertEqual(lattice.decode(centers[-1]), (8, 8, 8))
        with self.assertRaises(DomainError):
            hypercube_blocks(lattice, 4)

    def test_oriented_draws_are_valid(self):
        lattice = TorusLattice(3, 8)
        sampler = PriorSampler(PriorChoices.ORIENTED, lattice, 5, start=0, seed=3)
        for path in sample_prior(sampler, 50):
            self.assertTrue(is_valid_path(lattice, path, oriented=True))
            self.assertEqual(path.start, 0)

    def test_hypercube_draws_stay_in_one_block(self):
        lattice = TorusLattice(2, 12)
        sampler = PriorSampler(PriorChoices.HYPERCUBE, lattice, 3, seed=3)
        centers = set(hypercube_centers(lattice, 3).tolist())
        for row in sampler.draw(50):
            self.assertIn(int(row[0]), centers)
            self.assertTrue(is_valid_path(lattice, tuple(row), oriented=True))

    def test_draws_are_reproducible_by_index(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(3, 8), 5, seed=11)
        whole = sampler.draw(20)
        np.testing.assert_array_equal(whole[10:], sampler.draw(10, offset=10))
        again = PriorSampler(PriorChoices.ORIENTED, TorusLattice(3, 8), 5, seed=11)
        np.testing.assert_array_equal(whole, again.draw(20))

    def test_directions_are_capped_at_three(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(4, 4), 3)
        self.assertEqual(sampler.directions, 3)
        lattice = sampler.lattice
        first_three = {lattice.forward_table[0, axis] for axis in range(3)}
        for row in sampler.draw(100):
            self.assertIn(int(row[1]), first_three)

    def test_invalid_priors(self):
        with self.assertRaises(DomainError):
            PriorSampler(PriorChoices.ORIENTED, TorusLattice(2, 4), 5)
        with self.assertRaises(DomainError):
            PriorSampler(PriorChoices.HYPERCUBE, TorusLattice(2, 10), 3)

    def test_sample_class_paths(self):
        path_class = PathClass(TorusLattice(2, 5), 6)
        paths = sample_class_paths(path_class, 20, seed=5)
        self.assertEqual(len(paths), 20)
        self.assertTrue(all(path_class.contains(p) for p in paths))
        self.assertEqual(paths, sample_class_paths(path_class, 20, seed=5))


class TestEITFit(unittest.TestCase):
    """Test class."""

    def test_fit_envelope_dominates_geometric_tail(self):
        tail = (1.0, 0.5, 0.25, 0.125)
        c0, eta = fit_envelope(tail, [1000, 500, 250, 125], 1000)
        self.assertAlmostEqual(eta, 0.5, places=9)
        for ell, value in enumerate(tail, start=1):
            self.assertGreaterEqual(c0 * eta**ell, value * (1 - 1e-12))

    def test_fit_envelope_single_level(self):
        c0, eta = fit_envelope((0.01, 0.0, 0.0), [10, 0, 0], 1000)
        self.assertAlmostEqual(eta, 0.1)
        self.assertGreaterEqual(c0 * eta, 0.01 * (1 - 1e-12))

    def test_fit_envelope_rejects_growing_tail(self):
        with self.assertRaises(FitError):
            fit_envelope((0.1, 0.2, 0.4), [100, 200, 400], 1000)

    def test_estimate_eit_oriented(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(2, 8), 4, seed=1)
        fit = estimate_eit(sampler, 4000)
        self.assertFalse(fit.degenerate)
        self.assertEqual(fit.tail(1), 1.0)
        self.assertEqual(len(fit.tail_table), 4)
        self.assertLess(fit.eta, 1.0)
        for ell in range(1, 5):
            with self.subTest(ell=ell):
                self.assertGreaterEqual(fit.envelope(ell), fit.tail(ell) * (1 - 1e-12))

    def test_estimate_eit_degenerate(self):
        lattice = TorusLattice(2, 12)
        first = PriorSampler(PriorChoices.ORIENTED, lattice, 3, start=0, seed=1)
        far = PriorSampler(PriorChoices.ORIENTED, lattice, 3, start=lattice.encode((6, 6)), seed=2)
        fit = estimate_eit(first, 1000, other=far)
        self.assertTrue(fit.degenerate)
        self.assertIsNone(fit.eta)
        self.assertEqual(fit.envelope(2), 0.0)

    def test_estimate_eit_needs_trials(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(2, 8), 4)
        with self.assertRaises(DomainError):
            estimate_eit(sampler, 10)

    def test_estimate_eit_all_identical(self):
        sampler = PriorSampler(PriorChoices.ORIENTED, TorusLattice(1, 8), 4)
        with self.assertRaises(FitError):
            estimate_eit(sampler, 1000)

    def test_write_and_read(self):
        fit = EITFit(eta=0.4, c0=1.5, tail_table=(1.0, 0.3, 0.05), mc_trials=1000)
        with tempfile.TemporaryDirectory() as directory:
            destination = os.path.join(directory, "eit.json")
            fit.write(destination)
            self.assertEqual(EITFit.read(destination), fit)
