"""Validators for experiment configurations."""

import logging

from correlated_paths import DEFAULT_SETTINGS
from correlated_paths.choices import EngineChoices, PriorChoices, StartChoices
from correlated_paths.exceptions import ValidationError
from correlated_paths.graph import TorusLattice
from correlated_paths.paths import PathClass, count_bound, count_paths

logger = logging.getLogger(__name__)

MIN_SIDE = 3
BOUND_PSI_LIMIT = 1.0 / 9.0


class ExperimentValidator:
    """Domain checks run on a schema-valid config before any computation.

    Each ``validate_*`` method raises ValidationError naming the offending key.
    """

    def __init__(self, data):
        """Hold the config dict, with defaults already filled in."""
        self.data = data

    @property
    def lattice(self):
        """Lattice section values."""
        return self.data["lattice"]

    @property
    def path_class(self):
        """Path class section values."""
        return self.data["path_class"]

    def validate(self):
        """Run every check in order."""
        self.validate_lattice()
        self.validate_path_length()
        self.validate_start_node()
        self.validate_class_not_empty()
        self.validate_engine()
        self.validate_prior()
        self.validate_psi_grid("risk", limit=1.0)
        self.validate_psi_grid("moments", limit=1.0)
        self.validate_psi_grid("bounds", limit=BOUND_PSI_LIMIT)
        self.validate_panel()
        return self.data

    def _build_path_class(self, lattice):
        start = None
        if self.path_class["start"] == StartChoices.KNOWN:
            start = lattice.encode(self.path_class.get("start_node") or [0] * lattice.d)
        return PathClass(lattice, self.path_class["k"], start=start, oriented=self.path_class["oriented"])

    def validate_lattice(self):
        """The lattice needs m >= 3 so that neighbors along one axis are distinct."""
        if self.lattice["m"] < MIN_SIDE:
            raise ValidationError(f"lattice.m must be at least {MIN_SIDE}, got {self.lattice['m']}", key="lattice.m")

    def validate_path_length(self):
        """Paths need k >= 2, and k <= m for known-start and oriented classes."""
        k, m = self.path_class["k"], self.lattice["m"]
        if k < 2:
            raise ValidationError(f"path_class.k must be at least 2, got {k}", key="path_class.k")
        constrained = self.path_class["start"] == StartChoices.KNOWN or self.path_class["oriented"]
        if constrained and k > m:
            raise ValidationError(
                f"path_class.k={k} exceeds lattice.m={m}; known-start and oriented classes need k <= m",
                key="path_class.k",
            )

    def validate_start_node(self):
        """A known start must be a node of the lattice."""
        start_node = self.path_class.get("start_node")
        if start_node is None:
            return
        d, m = self.lattice["d"], self.lattice["m"]
        if len(start_node) != d or any(not 0 <= c < m for c in start_node):
            raise ValidationError(
                f"path_class.start_node {start_node} is not a node of the {d}-dimensional lattice with m={m}",
                key="path_class.start_node",
            )

    def validate_class_not_empty(self):
        """The class must hold at least one self-avoiding path, for instance k <= m on a cycle (d = 1)."""
        lattice = TorusLattice(self.lattice["d"], self.lattice["m"])
        path_class = self._build_path_class(lattice)
        if path_class.oriented_always_self_avoiding() or count_bound(path_class) > self.data["test"]["budget"]:
            return
        if count_paths(path_class, budget=self.data["test"]["budget"]).value == 0:
            raise ValidationError(
                f"path_class.k={path_class.k} admits no self-avoiding path on {lattice}", key="path_class.k"
            )

    def validate_engine(self):
        """The oriented dynamic program only runs on oriented classes."""
        engine = self.data["test"]["engine"]
        if engine == EngineChoices.ORIENTED_DP and not self.path_class["oriented"]:
            raise ValidationError("test.engine=dp requires path_class.oriented=true", key="test.engine")
        if engine.startswith(f"{EngineChoices.BEAM}:") and int(engine.partition(":")[2]) < 1:
            raise ValidationError(f"Beam width must be positive, got {engine}", key="test.engine")

    def validate_prior(self):
        """The hypercube prior needs m divisible by 2k."""
        if self.data["bounds"]["prior"] != PriorChoices.HYPERCUBE:
            return
        k, m = self.path_class["k"], self.lattice["m"]
        if m % (2 * k):
            raise ValidationError(
                f"bounds.prior=hypercube needs lattice.m divisible by 2k, got m={m}, k={k}", key="bounds.prior"
            )

    def validate_psi_grid(self, section, limit):
        """Every psi of a grid must lie strictly inside (-limit, limit)."""
        for psi in self.data[section]["psi_grid"]:
            if abs(psi) >= limit:
                raise ValidationError(
                    f"{section}.psi_grid value {psi} must satisfy |psi| < {limit:.6g}", key=f"{section}.psi_grid"
                )

    def validate_panel(self):
        """A planted-path panel has at least the default size unless the class itself is smaller."""
        panel_size = self.data["risk"]["panel_size"]
        if panel_size >= DEFAULT_SETTINGS["panel_size"]:
            return
        path_class = self._build_path_class(TorusLattice(self.lattice["d"], self.lattice["m"]))
        count = count_paths(path_class, budget=self.data["test"]["budget"])
        if count.value > panel_size:
            raise ValidationError(
                f"risk.panel_size={panel_size} is below {DEFAULT_SETTINGS['panel_size']} "
                f"while the class has {count.value} paths",
                key="risk.panel_size",
            )
