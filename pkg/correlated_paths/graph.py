"""Torus lattice graphs and self-avoiding paths on them."""

import logging
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np

from correlated_paths.exceptions import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TorusLattice:
    """The d-dimensional lattice {0, ..., m-1}^d with wraparound adjacency.

    Nodes are identified by their row-major index ``sum(c_i * m**(d - i))``; coordinates are a
    view computed on demand. Neighbor tables are built lazily and cached on the instance.
    """

    d: int
    m: int

    def __post_init__(self):
        """Validate the dimension and side length."""
        if self.d < 1:
            raise DomainError(f"Lattice dimension must be at least 1, got d={self.d}")
        if self.m < 2:
            raise DomainError(f"Lattice side length must be at least 2, got m={self.m}")

    def __str__(self):
        """Stringify instance."""
        return f"Torus lattice d={self.d}, m={self.m} ({self.n} nodes)"

    @property
    def n(self):
        """Number of nodes, m**d."""
        return self.m**self.d

    @property
    def shape(self):
        """Shape of the coordinate grid."""
        return (self.m,) * self.d

    def validate_node(self, v):
        """Raise DomainError unless ``v`` is a node index of this lattice."""
        if not 0 <= int(v) < self.n:
            raise DomainError(f"Node index {v} is outside [0, {self.n}) for {self}")

    def encode(self, coords):
        """Return the node index of a coordinate tuple."""
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.d or any(not 0 <= c < self.m for c in coords):
            raise DomainError(f"Coordinates {coords} are not valid for {self}")
        return int(np.ravel_multi_index(coords, self.shape))

    def decode(self, v):
        """Return the coordinate tuple of a node index."""
        self.validate_node(v)
        return tuple(int(c) for c in np.unravel_index(int(v), self.shape))

    @cached_property
    def forward_table(self):
        """Array of shape (n, d): column i holds the neighbor one step along +e_i."""
        grid = np.arange(self.n).reshape(self.shape)
        columns = [np.roll(grid, -1, axis=axis).ravel() for axis in range(self.d)]
        return np.stack(columns, axis=1)

    @cached_property
    def backward_table(self):
        """Array of shape (n, d): column i holds the neighbor one step along -e_i."""
        grid = np.arange(self.n).reshape(self.shape)
        columns = [np.roll(grid, 1, axis=axis).ravel() for axis in range(self.d)]
        return np.stack(columns, axis=1)

    @cached_property
    def neighbor_table(self):
        """Array of shape (n, 2d) of all wraparound neighbors, duplicates kept when m = 2."""
        return np.concatenate([self.backward_table, self.forward_table], axis=1)

    @cached_property
    def _forward_adjacency(self):
        return [tuple(sorted(set(row))) for row in self.forward_table.tolist()]

    @cached_property
    def _full_adjacency(self):
        return [tuple(sorted(set(row))) for row in self.neighbor_table.tolist()]

    def adjacency(self, oriented=False):
        """Return a list, indexed by node, of neighbor tuples in increasing index order."""
        return self._forward_adjacency if oriented else self._full_adjacency

    def forward_neighbors(self, v):
        """Return the d neighbors reached by the forward unit steps, in direction order."""
        self.validate_node(v)
        return tuple(int(u) for u in self.forward_table[int(v)])

    def neighbors(self, v):
        """Return the set of wraparound neighbors of ``v`` (2d nodes when m >= 3)."""
        self.validate_node(v)
        return frozenset(int(u) for u in self.neighbor_table[int(v)])

    def sorted_neighbors(self, v, oriented=False):
        """Return neighbors in increasing index order, restricted to forward steps if ``oriented``."""
        self.validate_node(v)
        return self.adjacency(oriented)[int(v)]

    def are_adjacent(self, u, v):
        """Return True if ``u`` and ``v`` are neighbors."""
        return int(v) in self.neighbors(u)

    def is_forward_step(self, u, v):
        """Return True if ``v`` is reached from ``u`` by one of the d forward unit steps."""
        return int(v) in self.forward_neighbors(u)

    def edges(self):
        """Yield every undirected edge once as an ordered pair (u, v) with u < v."""
        seen = set()
        for u in range(self.n):
            for v in self.forward_neighbors(u):
                edge = (min(u, v), max(u, v))
                if edge not in seen:
                    seen.add(edge)
                    yield edge

    def to_networkx(self):
        """Return the lattice as a networkx graph whose nodes are the node indices."""
        graph = nx.grid_graph(dim=[self.m] * self.d, periodic=True)
        # grid_graph lists coordinates in reverse order of ``dim``
        mapping = {node: self.encode(tuple(reversed(node)) if isinstance(node, tuple) else (node,)) for node in graph}
        return nx.relabel_nodes(graph, mapping)


@dataclass(frozen=True)
class Path:
    """An ordered node sequence; validity with respect to a lattice is checked by :func:`is_valid_path`."""

    nodes: tuple

    def __post_init__(self):
        """Normalize the node sequence to a tuple of ints."""
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))

    def __len__(self):
        """Number of nodes in the path."""
        return len(self.nodes)

    def __iter__(self):
        """Iterate over node indices."""
        return iter(self.nodes)

    def __str__(self):
        """Stringify as the comma-separated text form."""
        return format_path(self)

    @property
    def k(self):
        """Path length, counted in nodes."""
        return len(self.nodes)

    @property
    def start(self):
        """First node."""
        return self.nodes[0]

    @classmethod
    def from_coords(cls, lattice, coords):
        """Build a path from a sequence of coordinate tuples."""
        return cls(tuple(lattice.encode(c) for c in coords))

    def coords(self, lattice):
        """Return the path as a tuple of coordinate tuples."""
        return tuple(lattice.decode(v) for v in self.nodes)

    def as_array(self):
        """Return the nodes as an int64 numpy array."""
        return np.asarray(self.nodes, dtype=np.int64)


def neighbors(lattice, v):
    """Return the wraparound neighbors of ``v`` on ``lattice``."""
    return lattice.neighbors(v)


def is_valid_path(lattice, p, oriented=False):
    """Return True iff ``p`` is a self-avoiding path of at least two adjacent-consecutive nodes.

    Args:
        lattice (TorusLattice): Host graph.
        p (Path | Sequence[int] | Sequence[tuple]): Candidate node sequence, as indices or coordinates.
        oriented (bool): Additionally require every step to be a forward unit step.
    """
    nodes = tuple(p.nodes if isinstance(p, Path) else p)
    if len(nodes) < 2:
        return False
    try:
        if isinstance(nodes[0], (tuple, list)):
            nodes = tuple(lattice.encode(c) for c in nodes)
        for v in nodes:
            lattice.validate_node(v)
    except (DomainError, TypeError, ValueError):
        return False
    if len(set(nodes)) != len(nodes):
        return False
    step_ok = lattice.is_forward_step if oriented else lattice.are_adjacent
    return all(step_ok(u, v) for u, v in zip(nodes, nodes[1:]))


def intersection_size(s, t):
    """Return the number of nodes shared by two paths, ignoring order."""
    return len(set(s) & set(t))


def intersection_sizes(s_nodes, t_nodes):
    """Vectorized |S ∩ T| for arrays of self-avoiding paths.

    Args:
        s_nodes (numpy.ndarray): Array of shape (pairs, k_s) of node indices.
        t_nodes (numpy.ndarray): Array of shape (pairs, k_t) of node indices.

    Returns:
        numpy.ndarray: Integer array of shape (pairs,).
    """
    merged = np.sort(np.concatenate([np.atleast_2d(s_nodes), np.atleast_2d(t_nodes)], axis=1), axis=1)
    return np.count_nonzero(merged[:, 1:] == merged[:, :-1], axis=1)


def format_path(path):
    """Render a path as one line of comma-separated node indices."""
    return ",".join(str(v) for v in path)


def parse_path(line):
    """Parse one comma-separated line into a Path."""
    line = line.strip()
    if not line:
        raise DomainError("Cannot parse an empty path line")
    try:
        return Path(tuple(int(token) for token in line.split(",")))
    except ValueError as err:
        raise DomainError(f"Invalid path line {line!r}: {err}") from err


def write_paths(destination, paths):
    """Write paths to a text file, one per line."""
    with open(destination, "w", encoding="utf-8") as handle:
        for path in paths:
            handle.write(format_path(path) + "\n")


def read_paths(source):
    """Read paths written by :func:`write_paths`."""
    with open(source, "r", encoding="utf-8") as handle:
        return [parse_path(line) for line in handle if line.strip()]
