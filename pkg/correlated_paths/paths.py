"""Path classes, their cardinalities, and the priors used by the lower-bound constructions."""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from correlated_paths import DEFAULT_SETTINGS
from correlated_paths.choices import PriorChoices, StartChoices
from correlated_paths.exceptions import BudgetExceededError, DomainError, FitError
from correlated_paths.graph import Path, intersection_sizes, is_valid_path
from correlated_paths.rng import STREAM_PANEL, STREAM_PRIOR, substream

logger = logging.getLogger(__name__)

MIN_EIT_TRIALS = 1000
MAX_PRIOR_DIRECTIONS = 3


@dataclass(frozen=True)
class PathClass:
    """Declarative description of a class C of self-avoiding paths on a torus lattice.

    Attributes:
        lattice (TorusLattice): Ambient graph.
        k (int): Number of nodes of every path in the class.
        start (int | None): Known starting node, or None when the start is unknown.
        oriented (bool): Restrict paths to the d forward unit steps.
    """

    lattice: object
    k: int
    start: object = None
    oriented: bool = False

    def __post_init__(self):
        """Validate length and starting node."""
        if self.k < 2:
            raise DomainError(f"Paths must have at least 2 nodes, got k={self.k}")
        if self.start is not None:
            self.lattice.validate_node(self.start)
            object.__setattr__(self, "start", int(self.start))

    def __str__(self):
        """Stringify instance."""
        start = f"start={self.start}" if self.known_start else "unknown start"
        kind = "oriented" if self.oriented else "self-avoiding"
        return f"{kind} paths of k={self.k} nodes, {start}, on {self.lattice}"

    @property
    def known_start(self):
        """True when every path of the class starts at the same node."""
        return self.start is not None

    @property
    def start_kind(self):
        """StartChoices member describing the start constraint."""
        return StartChoices.KNOWN if self.known_start else StartChoices.UNKNOWN

    def starts(self):
        """Return the admissible starting nodes in increasing order."""
        if self.known_start:
            return (self.start,)
        return range(self.lattice.n)

    def step_count(self):
        """Number of step choices at each node (d if oriented, 2d otherwise)."""
        return self.lattice.d if self.oriented else 2 * self.lattice.d

    def oriented_always_self_avoiding(self):
        """True when every oriented step sequence is self-avoiding (k <= m)."""
        return self.oriented and self.k <= self.lattice.m

    def contains(self, path):
        """Return True if ``path`` belongs to this class."""
        if len(path) != self.k:
            return False
        if self.known_start and path.start != self.start:
            return False
        return is_valid_path(self.lattice, path, oriented=self.oriented)


@dataclass(frozen=True)
class PathCount:
    """Cardinality of a path class; ``exact`` is False when ``value`` is only an upper bound."""

    value: int
    exact: bool

    def log(self):
        """Natural logarithm of the value."""
        return math.log(self.value) if self.value > 0 else -math.inf


@dataclass(frozen=True)
class PathSupport:
    """An explicit, weighted list of paths: a prior whose support is enumerated by hand."""

    paths: tuple
    weights: tuple = None

    def __post_init__(self):
        """Default to uniform weights and check that the weights form a distribution."""
        paths = tuple(p if isinstance(p, Path) else Path(p) for p in self.paths)
        if not paths:
            raise DomainError("A path support needs at least one path")
        if len({len(p) for p in paths}) != 1:
            raise DomainError("All paths of a support must have the same length")
        weights = self.weights
        if weights is None:
            weights = (1.0 / len(paths),) * len(paths)
        weights = tuple(float(w) for w in weights)
        if len(weights) != len(paths):
            raise DomainError(f"Got {len(weights)} weights for {len(paths)} paths")
        if any(w < 0 for w in weights) or not math.isclose(sum(weights), 1.0, rel_tol=1e-9):
            raise DomainError(f"Weights must be non-negative and sum to 1, got sum {sum(weights)}")
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "weights", weights)

    @property
    def k(self):
        """Common path length."""
        return len(self.paths[0])

    def as_array(self):
        """Return the support as an int64 array of shape (paths, k)."""
        return np.array([p.nodes for p in self.paths], dtype=np.int64)

    def weight_array(self):
        """Return the weights as a float64 array."""
        return np.asarray(self.weights, dtype=np.float64)


def count_bound(path_class):
    """Return the closed-form upper bound on |C|: steps**(k-1), times n for an unknown start."""
    per_start = path_class.step_count() ** (path_class.k - 1)
    return per_start if path_class.known_start else path_class.lattice.n * per_start


def _count_from(lattice, start, k, oriented):
    """Count self-avoiding paths of ``k`` nodes from ``start`` by depth-first search."""
    total = 0
    visited = {start}
    stack = [(start, iter(lattice.sorted_neighbors(start, oriented)))]
    while stack:
        node, children = stack[-1]
        depth = len(stack)
        if depth == k - 1:
            # Last step: count the admissible endpoints without descending
            total += sum(1 for child in lattice.sorted_neighbors(node, oriented) if child not in visited)
            stack.pop()
            visited.discard(node)
            continue
        child = next((c for c in children if c not in visited), None)
        if child is None:
            stack.pop()
            visited.discard(node)
            continue
        visited.add(child)
        stack.append((child, iter(lattice.sorted_neighbors(child, oriented))))
    return total


def count_paths(path_class, budget=None):
    """Return the cardinality of ``path_class``, exact when affordable.

    Oriented classes with k <= m are counted in closed form (every oriented step sequence is
    self-avoiding). Other classes are counted by exhaustive search when the closed-form bound
    fits in ``budget``; an unknown start multiplies the single-start count by n, the torus being
    vertex-transitive. Otherwise the bound is returned with ``exact=False``.

    Args:
        path_class (PathClass): Class to count.
        budget (int): Enumeration budget, defaults to ``DEFAULT_SETTINGS["enumeration_budget"]``.

    Returns:
        PathCount: Exact count or tagged upper bound.
    """
    budget = DEFAULT_SETTINGS["enumeration_budget"] if budget is None else budget
    lattice = path_class.lattice
    starts = 1 if path_class.known_start else lattice.n
    if path_class.oriented_always_self_avoiding():
        return PathCount(starts * lattice.d ** (path_class.k - 1), exact=True)
    bound = count_bound(path_class)
    if bound > budget:
        logger.warning("Class too large to count (bound %s > budget %s); using the bound", bound, budget)
        return PathCount(bound, exact=False)
    start = path_class.start if path_class.known_start else 0
    per_start = _count_from(lattice, start, path_class.k, path_class.oriented)
    return PathCount(starts * per_start, exact=True)


def log_cardinality(path_class, budget=None):
    """Return log|C|, or the log of the closed-form bound when the class cannot be counted."""
    count = count_paths(path_class, budget=budget)
    if count.exact:
        return count.log()
    log_bound = (path_class.k - 1) * math.log(path_class.step_count())
    if not path_class.known_start:
        log_bound += math.log(path_class.lattice.n)
    return log_bound


def enumerate_paths(path_class, budget=None):
    """Yield every path of ``path_class`` exactly once, in lexicographic order of node indices.

    Raises:
        BudgetExceededError: If the closed-form bound on |C| exceeds ``budget``.
    """
    budget = DEFAULT_SETTINGS["enumeration_budget"] if budget is None else budget
    bound = count_bound(path_class)
    if bound > budget:
        raise BudgetExceededError(
            f"Refusing to enumerate {path_class}: up to {bound} paths exceeds the budget of {budget}",
            bound=bound,
            budget=budget,
        )
    lattice = path_class.lattice
    oriented = path_class.oriented
    for start in path_class.starts():
        prefix = [start]
        visited = {start}
        stack = [iter(lattice.sorted_neighbors(start, oriented))]
        while stack:
            child = next((c for c in stack[-1] if c not in visited), None)
            if child is None:
                stack.pop()
                visited.discard(prefix.pop())
                continue
            if len(prefix) == path_class.k - 1:
                yield Path(tuple(prefix) + (child,))
                continue
            prefix.append(child)
            visited.add(child)
            stack.append(iter(lattice.sorted_neighbors(child, oriented)))


def enumerate_path_array(path_class, budget=None):
    """Return every path of the class as an int64 array of shape (|C|, k)."""
    rows = [p.nodes for p in enumerate_paths(path_class, budget=budget)]
    return np.array(rows, dtype=np.int64).reshape(len(rows), path_class.k)


def as_support(prior, budget=None):
    """Coerce a PathClass (uniform prior), PathSupport, Path or path list into a PathSupport."""
    if isinstance(prior, PathSupport):
        return prior
    if isinstance(prior, PathClass):
        return PathSupport(tuple(enumerate_paths(prior, budget=budget)))
    if isinstance(prior, Path):
        return PathSupport((prior,))
    return PathSupport(tuple(prior))


def hypercube_blocks(lattice, k):
    """Return |J|, the number of side-2k blocks partitioning the lattice."""
    _check_hypercube(lattice, k)
    return (lattice.m // (2 * k)) ** lattice.d


def hypercube_centers(lattice, k):
    """Return the node indices v_j of the centers of the side-(2k-1) hypercubes, one per block."""
    _check_hypercube(lattice, k)
    per_axis = lattice.m // (2 * k)
    block_coords = np.indices((per_axis,) * lattice.d).reshape(lattice.d, -1).T
    centers = block_coords * (2 * k) + (k - 1)
    return np.array([lattice.encode(c) for c in centers], dtype=np.int64)


def _check_hypercube(lattice, k):
    if lattice.m % (2 * k) != 0:
        raise DomainError(f"Hypercube prior needs m divisible by 2k, got m={lattice.m} and 2k={2 * k}")


def _walk_forward(lattice, starts, steps):
    """Follow forward steps from ``starts``; ``steps`` has shape (draws, k-1) of direction indices."""
    forward = lattice.forward_table
    nodes = np.empty((steps.shape[0], steps.shape[1] + 1), dtype=np.int64)
    nodes[:, 0] = starts
    for j in range(steps.shape[1]):
        nodes[:, j + 1] = forward[nodes[:, j], steps[:, j]]
    return nodes


@dataclass(frozen=True)
class PriorSampler:
    """Seeded sampler for the priors of the lower-bound constructions.

    ``ORIENTED`` draws uniform oriented paths from ``start`` using the first min(d, 3) forward
    directions (higher dimensions embed the three-dimensional construction). ``HYPERCUBE`` picks a
    block uniformly, then an oriented path from that block's center. Draw ``i`` uses its own
    counter-based stream, so any index range can be reproduced independently.
    """

    kind: PriorChoices
    lattice: object
    k: int
    start: int = 0
    seed: int = 0
    directions: int = field(init=False)

    def __post_init__(self):
        """Check the preconditions of the chosen prior."""
        object.__setattr__(self, "kind", PriorChoices(self.kind))
        object.__setattr__(self, "directions", min(self.lattice.d, MAX_PRIOR_DIRECTIONS))
        if self.k < 2:
            raise DomainError(f"Prior paths need at least 2 nodes, got k={self.k}")
        if self.kind == PriorChoices.ORIENTED:
            if self.k > self.lattice.m:
                raise DomainError(f"Oriented prior needs k <= m for self-avoidance, got k={self.k}, m={self.lattice.m}")
            self.lattice.validate_node(self.start)
        else:
            _check_hypercube(self.lattice, self.k)

    @property
    def blocks(self):
        """Number of mixture components |J| (1 for the oriented prior)."""
        if self.kind == PriorChoices.ORIENTED:
            return 1
        return hypercube_blocks(self.lattice, self.k)

    def _draw_with(self, generator, count):
        """Draw ``count`` paths from one generator, as an array of shape (count, k)."""
        if self.kind == PriorChoices.ORIENTED:
            starts = np.full(count, self.start, dtype=np.int64)
        else:
            centers = hypercube_centers(self.lattice, self.k)
            starts = centers[generator.integers(0, len(centers), size=count)]
        steps = generator.integers(0, self.directions, size=(count, self.k - 1))
        return _walk_forward(self.lattice, starts, steps)

    def draw(self, count, offset=0):
        """Return draws ``offset .. offset+count-1`` as an int64 array of shape (count, k)."""
        rows = [self._draw_with(substream(self.seed, STREAM_PRIOR, 0, offset + i), 1)[0] for i in range(count)]
        return np.array(rows, dtype=np.int64).reshape(count, self.k)

    def draw_pairs(self, count, offset=0):
        """Return ``count`` i.i.d. pairs (S, T) as two arrays of shape (count, k)."""
        pairs = [self._draw_with(substream(self.seed, STREAM_PRIOR, 1, offset + i), 2) for i in range(count)]
        stacked = np.array(pairs, dtype=np.int64).reshape(count, 2, self.k)
        return stacked[:, 0, :], stacked[:, 1, :]


def sample_prior(sampler, count, offset=0):
    """Return ``count`` i.i.d. paths from ``sampler`` as a list of Path."""
    return [Path(tuple(row)) for row in sampler.draw(count, offset=offset)]


def sample_class_paths(path_class, count, seed):
    """Return ``count`` seeded random members of ``path_class``.

    Oriented classes take uniform forward steps; other classes grow a walk by choosing uniformly
    among unvisited neighbors and restart when the walk gets trapped. Unknown starts are uniform.
    """
    lattice = path_class.lattice
    paths = []
    for index in range(count):
        generator = substream(seed, STREAM_PANEL, 0, index)
        while True:
            start = path_class.start if path_class.known_start else int(generator.integers(0, lattice.n))
            nodes = [start]
            visited = {start}
            while len(nodes) < path_class.k:
                options = [v for v in lattice.sorted_neighbors(nodes[-1], path_class.oriented) if v not in visited]
                if not options:
                    break
                nxt = options[int(generator.integers(0, len(options)))]
                nodes.append(nxt)
                visited.add(nxt)
            if len(nodes) == path_class.k:
                paths.append(Path(tuple(nodes)))
                break
            logger.debug("Growth walk trapped after %s nodes; restarting", len(nodes))
    return paths


@dataclass(frozen=True)
class EITFit:
    """Empirical intersection tail table with an exponential envelope ``c0 * eta**l`` dominating it.

    A degenerate fit (no draw pair ever intersects) carries no envelope: ``eta`` and ``c0`` are None.
    """

    eta: object
    c0: object
    tail_table: tuple
    mc_trials: int
    degenerate: bool = False

    def tail(self, ell):
        """Empirical P(|S ∩ T| >= ell), for ell >= 1; zero beyond the table."""
        if ell < 1:
            return 1.0
        return self.tail_table[ell - 1] if ell <= len(self.tail_table) else 0.0

    def envelope(self, ell):
        """Fitted envelope value c0 * eta**ell."""
        if self.degenerate:
            return 0.0
        return self.c0 * self.eta**ell

    def to_json(self):
        """Return the JSON-serializable form {eta, c0, tail, trials}."""
        return {"eta": self.eta, "c0": self.c0, "tail": list(self.tail_table), "trials": self.mc_trials}

    @classmethod
    def from_json(cls, data):
        """Rebuild a fit from :meth:`to_json` output."""
        degenerate = data.get("eta") is None
        return cls(
            eta=data.get("eta"),
            c0=data.get("c0"),
            tail_table=tuple(float(v) for v in data["tail"]),
            mc_trials=int(data["trials"]),
            degenerate=degenerate,
        )

    def write(self, destination):
        """Write the fit as JSON."""
        with open(destination, "w", encoding="utf-8") as handle:
            json.dump(self.to_json(), handle, indent=2)
            handle.write("\n")

    @classmethod
    def read(cls, source):
        """Read a fit written by :meth:`write`."""
        with open(source, "r", encoding="utf-8") as handle:
            return cls.from_json(json.load(handle))


def fit_envelope(tail_table, counts, trials):
    """Fit ``(c0, eta)`` so that ``c0 * eta**l`` dominates a tail table.

    The slope comes from a least-squares fit of log-tail against l, weighted by the square root of
    the supporting counts; the intercept is then raised until the envelope dominates every
    recorded point. When only one point is positive, the first empty level enters the fit at the
    resolution 1/trials.

    Raises:
        FitError: If the table does not decay.
    """
    tail = np.asarray(tail_table, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    levels = np.arange(1, len(tail) + 1, dtype=np.float64)
    positive = tail > 0
    xs, ys, ws = list(levels[positive]), list(np.log(tail[positive])), list(np.sqrt(counts[positive]))
    if len(xs) < 2:
        empty = np.flatnonzero(~positive)
        if empty.size == 0:
            raise FitError("Tail table has a single level and cannot be fitted")
        xs.append(levels[empty[0]])
        ys.append(math.log(1.0 / trials))
        ws.append(1.0)
    slope, _ = np.polyfit(np.asarray(xs), np.asarray(ys), 1, w=np.asarray(ws))
    if slope >= 0:
        raise FitError(f"Intersection tail does not decay (fitted log-slope {slope:.4g})")
    eta = float(math.exp(slope))
    c0 = float(np.max(tail[positive] / eta ** levels[positive]))
    return c0, eta


def estimate_eit(sampler, trials, other=None):
    """Measure the intersection tail of i.i.d. pairs from ``sampler`` and fit an EIT envelope.

    Args:
        sampler (PriorSampler): Source of S (and of T unless ``other`` is given).
        trials (int): Number of pairs, at least 1000.
        other (PriorSampler): Optional independent source of T.

    Returns:
        EITFit: The tail table and fitted ``(c0, eta)``; ``degenerate`` when no pair intersects.

    Raises:
        FitError: If every pair intersects in all k nodes, or the tail does not decay.
    """
    if trials < MIN_EIT_TRIALS:
        raise DomainError(f"EIT estimation needs at least {MIN_EIT_TRIALS} trials, got {trials}")
    if other is None:
        s_nodes, t_nodes = sampler.draw_pairs(trials)
    else:
        s_nodes = sampler.draw(trials)
        t_nodes = other.draw(trials)
    sizes = intersection_sizes(s_nodes, t_nodes)
    k = max(s_nodes.shape[1], t_nodes.shape[1])
    counts = np.array([np.count_nonzero(sizes >= ell) for ell in range(1, k + 1)], dtype=np.int64)
    tail = tuple(float(c) / trials for c in counts)
    logger.info("Intersection tail over %s pairs: P(>=1)=%.4g, P(>=2)=%.4g", trials, tail[0], tail[1])
    if counts[-1] == trials:
        raise FitError(f"All {trials} pairs intersect in all {k} nodes; the tail is degenerate")
    if counts[0] == 0:
        logger.warning("No sampled pair intersects; reporting a degenerate tail table")
        return EITFit(eta=None, c0=None, tail_table=tail, mc_trials=trials, degenerate=True)
    c0, eta = fit_envelope(tail, counts, trials)
    logger.info("Fitted EIT envelope c0=%.4g, eta=%.4g", c0, eta)
    return EITFit(eta=eta, c0=c0, tail_table=tail, mc_trials=trials)
