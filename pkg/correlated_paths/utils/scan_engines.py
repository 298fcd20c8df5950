"""Maximization engines for the pair-count scan statistic V_t* over a path class.

Every engine returns ``(v_star, path, exact)``. Among paths achieving the maximum, the exact
engines return the one whose node sequence is lexicographically smallest.
"""

import logging
import math

import numpy as np

from correlated_paths.choices import SignChoices
from correlated_paths.exceptions import BudgetExceededError, DomainError
from correlated_paths.graph import Path
from correlated_paths.paths import count_bound

logger = logging.getLogger(__name__)


def pair_values(values, left, right, sign):
    """Return X_right - X_left for PLUS and X_right + X_left for MINUS, elementwise."""
    if sign == SignChoices.PLUS:
        return values[right] - values[left]
    if sign == SignChoices.MINUS:
        return values[right] + values[left]
    raise DomainError(f"Pair comparisons need sign plus or minus, got {sign}")


def pair_hits(values, left, right, threshold, sign):
    """Indicator |X_right -/+ X_left| <= sqrt(2) * threshold, elementwise."""
    return np.abs(pair_values(values, left, right, sign)) <= math.sqrt(2.0) * threshold


class BaseScanEngine:
    """Shared plumbing for the engines."""

    exact = True

    def __init__(self, budget):
        """Store the enumeration budget."""
        self.budget = budget

    def check_admissible(self, path_class):
        """Raise if this engine cannot handle ``path_class``."""

    def run(self, values, path_class, threshold, sign):
        """Return ``(v_star, path, exact)`` for one sample."""
        raise NotImplementedError


class ExhaustiveEngine(BaseScanEngine):
    """Depth-first search over every self-avoiding extension, with branch-and-bound pruning.

    A branch is abandoned as soon as its current score plus the number of remaining steps
    cannot beat the best score found so far.
    """

    def check_admissible(self, path_class):
        """Refuse classes whose closed-form size bound exceeds the budget."""
        bound = count_bound(path_class)
        if bound > self.budget:
            raise BudgetExceededError(
                f"Exhaustive scan of {path_class} may visit {bound} paths, over the budget of {self.budget}",
                bound=bound,
                budget=self.budget,
            )

    def run(self, values, path_class, threshold, sign):
        """Search the whole class."""
        self.check_admissible(path_class)
        lattice = path_class.lattice
        values = np.asarray(values, dtype=np.float64).tolist()
        adjacency = lattice.adjacency(path_class.oriented)
        k = path_class.k
        limit = math.sqrt(2.0) * threshold
        plus = sign == SignChoices.PLUS
        best = {"score": -1, "nodes": None}
        prefix = []
        visited = set()

        def hit(u, v):
            pair = values[v] - values[u] if plus else values[v] + values[u]
            return abs(pair) <= limit

        def extend(score):
            if len(prefix) == k:
                if score > best["score"]:
                    best["score"], best["nodes"] = score, tuple(prefix)
                return
            if score + (k - len(prefix)) <= best["score"]:
                return
            tail = prefix[-1]
            for child in adjacency[tail]:
                if child in visited:
                    continue
                prefix.append(child)
                visited.add(child)
                extend(score + int(hit(tail, child)))
                visited.discard(child)
                prefix.pop()
                if best["score"] == k - 1:
                    return

        for start in path_class.starts():
            prefix.append(start)
            visited.add(start)
            extend(0)
            visited.discard(start)
            prefix.pop()
            if best["score"] == k - 1:
                break
        if best["nodes"] is None:
            raise DomainError(f"{path_class} has no member paths")
        return best["score"], Path(best["nodes"]), True


class OrientedDPEngine(BaseScanEngine):
    """Backward dynamic programming over (node, position) for oriented classes.

    ``best[j][v]`` is the largest score collectable by the last k-1-j steps of an oriented path
    sitting at ``v`` in position ``j``. Oriented paths with k <= m never revisit a node, so no
    visited set is needed and the cost is O(n * k * d).
    """

    def check_admissible(self, path_class):
        """Require an oriented class with k <= m."""
        if not path_class.oriented:
            raise DomainError("The oriented dynamic program only applies to oriented path classes")
        if path_class.k > path_class.lattice.m:
            raise DomainError(
                f"The oriented dynamic program needs k <= m, got k={path_class.k}, m={path_class.lattice.m}"
            )

    def run(self, values, path_class, threshold, sign):
        """Solve the class in closed sweeps over the forward table."""
        self.check_admissible(path_class)
        values = np.asarray(values, dtype=np.float64)
        forward = path_class.lattice.forward_table
        source = np.arange(forward.shape[0])[:, np.newaxis]
        edge_hits = pair_hits(values, source, forward, threshold, sign).astype(np.int64)
        k = path_class.k
        best = [None] * k
        best[k - 1] = np.zeros(forward.shape[0], dtype=np.int64)
        for j in range(k - 2, -1, -1):
            best[j] = (edge_hits + best[j + 1][forward]).max(axis=1)
        if path_class.known_start:
            node = path_class.start
        else:
            node = int(np.argmax(best[0]))
        v_star = int(best[0][node])
        nodes = [node]
        for j in range(k - 1):
            totals = edge_hits[node] + best[j + 1][forward[node]]
            target = best[j][node]
            node = int(min(forward[node][totals == target]))
            nodes.append(node)
        return v_star, Path(tuple(nodes)), True


class BeamEngine(BaseScanEngine):
    """Beam search keeping the ``width`` best partial paths at each length; a lower bound on V_t*."""

    exact = False

    def __init__(self, budget, width):
        """Store the beam width."""
        super().__init__(budget)
        if width < 1:
            raise DomainError(f"Beam width must be positive, got {width}")
        self.width = width

    def run(self, values, path_class, threshold, sign):
        """Grow partial paths layer by layer, ranking by (score, then node sequence)."""
        values = np.asarray(values, dtype=np.float64).tolist()
        adjacency = path_class.lattice.adjacency(path_class.oriented)
        limit = math.sqrt(2.0) * threshold
        plus = sign == SignChoices.PLUS
        beam = [(0, (start,)) for start in path_class.starts()]
        for _ in range(path_class.k - 1):
            extended = []
            for score, nodes in beam:
                tail = nodes[-1]
                for child in adjacency[tail]:
                    if child in nodes:
                        continue
                    pair = values[child] - values[tail] if plus else values[child] + values[tail]
                    extended.append((score + int(abs(pair) <= limit), nodes + (child,)))
            extended.sort(key=lambda item: (-item[0], item[1]))
            beam = extended[: self.width]
            if not beam:
                raise DomainError(f"Beam search found no path of {path_class}")
        score, nodes = beam[0]
        logger.debug("Beam of width %s kept %s candidates; best score %s", self.width, len(beam), score)
        return score, Path(nodes), False
