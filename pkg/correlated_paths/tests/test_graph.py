"""Test torus lattices and paths."""

import os
import tempfile
import unittest

import numpy as np

from correlated_paths.exceptions import DomainError
from correlated_paths.graph import (
    Path,
    TorusLattice,
    intersection_size,
    intersection_sizes,
    is_valid_path,
    parse_path,
    read_paths,
    write_paths,
)


class TestTorusLattice(unittest.TestCase):
    """Test class."""

    def test_size(self):
        test_cases = [((1, 5), 5), ((2, 5), 25), ((3, 12), 1728)]
        for (d, m), expected in test_cases:
            with self.subTest(d=d, m=m):
                self.assertEqual(TorusLattice(d, m).n, expected)

    def test_invalid_lattice(self):
        with self.assertRaises(DomainError):
            TorusLattice(0, 5)
        with self.assertRaises(DomainError):
            TorusLattice(2, 1)

    def test_encode_decode(self):
        lattice = TorusLattice(3, 4)
        self.assertEqual(lattice.encode((0, 0, 0)), 0)
        self.assertEqual(lattice.encode((0, 0, 1)), 1)
        self.assertEqual(lattice.encode((1, 2, 3)), 1 * 16 + 2 * 4 + 3)
        for v in (0, 17, 63):
            with self.subTest(v=v):
                self.assertEqual(lattice.encode(lattice.decode(v)), v)
        with self.assertRaises(DomainError):
            lattice.encode((4, 0, 0))
        with self.assertRaises(DomainError):
            lattice.decode(64)

    def test_neighbors_wrap_around(self):
        lattice = TorusLattice(2, 5)
        origin = lattice.encode((0, 0))
        expected = {lattice.encode(c) for c in ((4, 0), (1, 0), (0, 4), (0, 1))}
        self.assertEqual(lattice.neighbors(origin), frozenset(expected))
        self.assertEqual(len(lattice.neighbors(12)), 4)

    def test_neighbors_are_symmetric(self):
        lattice = TorusLattice(3, 3)
        for u in range(lattice.n):
            for v in lattice.neighbors(u):
                self.assertIn(u, lattice.neighbors(v))
            self.assertNotIn(u, lattice.neighbors(u))

    def test_forward_neighbors(self):
        lattice = TorusLattice(2, 5)
        v = lattice.encode((4, 2))
        self.assertEqual(lattice.forward_neighbors(v), (lattice.encode((0, 2)), lattice.encode((4, 3))))
        self.assertTrue(lattice.is_forward_step(v, lattice.encode((0, 2))))
        self.assertFalse(lattice.is_forward_step(lattice.encode((0, 2)), v))

    def test_sorted_neighbors(self):
        lattice = TorusLattice(2, 5)
        neighbors = lattice.sorted_neighbors(0)
        self.assertEqual(list(neighbors), sorted(lattice.neighbors(0)))
        self.assertEqual(lattice.sorted_neighbors(0, oriented=True), (1, 5))

    def test_edges(self):
        lattice = TorusLattice(2, 4)
        edges = list(lattice.edges())
        self.assertEqual(len(edges), lattice.d * lattice.n)
        self.assertEqual(len(set(edges)), len(edges))
        self.assertTrue(all(u < v for u, v in edges))

    def test_to_networkx(self):
        lattice = TorusLattice(2, 4)
        graph = lattice.to_networkx()
        self.assertEqual(graph.number_of_nodes(), lattice.n)
        self.assertEqual(graph.number_of_edges(), lattice.d * lattice.n)
        for v in (0, 5, 15):
            with self.subTest(v=v):
                self.assertEqual(set(graph.neighbors(v)), set(lattice.neighbors(v)))


class TestPaths(unittest.TestCase):
    """Test class."""

    def setUp(self):
        """Create test data."""
        self.lattice = TorusLattice(2, 5)

    def test_is_valid_path(self):
        test_cases = [
            ((0, 1, 2), True),
            ((0, 5, 10), True),
            ((0, 4), True),
            ((0, 1, 0), False),
            ((0, 2), False),
            ((0,), False),
            ((0, 25), False),
        ]
        for nodes, expected in test_cases:
            with self.subTest(nodes=nodes):
                self.assertEqual(is_valid_path(self.lattice, Path(nodes)), expected)

    def test_is_valid_path_from_coordinates(self):
        self.assertTrue(is_valid_path(self.lattice, [(0, 0), (0, 1), (1, 1)]))
        self.assertFalse(is_valid_path(self.lattice, [(0, 0), (1, 1)]))

    def test_oriented_paths(self):
        self.assertTrue(is_valid_path(self.lattice, (0, 1, 6), oriented=True))
        self.assertFalse(is_valid_path(self.lattice, (1, 0), oriented=True))
        self.assertFalse(is_valid_path(self.lattice, (0, 4), oriented=True))

    def test_path_properties(self):
        path = Path.from_coords(self.lattice, [(0, 0), (0, 1), (1, 1)])
        self.assertEqual(path.nodes, (0, 1, 6))
        self.assertEqual(path.k, 3)
        self.assertEqual(path.start, 0)
        self.assertEqual(path.coords(self.lattice), ((0, 0), (0, 1), (1, 1)))
        self.assertEqual(str(path), "0,1,6")

    def test_intersection_size(self):
        self.assertEqual(intersection_size(Path((0, 1, 2)), Path((2, 1, 6))), 2)
        self.assertEqual(intersection_size(Path((0, 1)), Path((5, 10))), 0)

    def test_intersection_sizes(self):
        s_nodes = np.array([[0, 1, 2], [0, 1, 2], [0, 5, 10]])
        t_nodes = np.array([[0, 1, 2], [3, 4, 9], [10, 11, 5]])
        np.testing.assert_array_equal(intersection_sizes(s_nodes, t_nodes), [3, 0, 2])

    def test_parse_path(self):
        self.assertEqual(parse_path(" 0,1,6\n"), Path((0, 1, 6)))
        with self.assertRaises(DomainError):
            parse_path("")
        with self.assertRaises(DomainError):
            parse_path("0,a")

    def test_write_and_read_paths(self):
        paths = [Path((0, 1, 6)), Path((3, 8, 13))]
        with tempfile.TemporaryDirectory() as directory:
            destination = os.path.join(directory, "paths.txt")
            write_paths(destination, paths)
            self.assertEqual(read_paths(destination), paths)
