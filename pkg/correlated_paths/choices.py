"""Choice definitions for correlated_paths."""

from enum import Enum


class _Choices(str, Enum):
    """String-valued choice set; members compare equal to their values."""

    @classmethod
    def values(cls):
        """Return the raw values of every member, in declaration order."""
        return [member.value for member in cls]

    def __str__(self):
        """Stringify as the raw value, as it appears in config files."""
        return self.value


class SignChoices(_Choices):
    """Which pair comparison the scan statistic uses.

    PLUS compares consecutive differences (positive correlation). MINUS compares consecutive sums
    (negative correlation). BOTH runs the two with a Bonferroni split.
    """

    PLUS = "plus"
    MINUS = "minus"
    BOTH = "both"


class EngineChoices(_Choices):
    """Maximization engines for the scan statistic."""

    EXHAUSTIVE = "exhaustive"
    ORIENTED_DP = "dp"
    BEAM = "beam"


class StartChoices(_Choices):
    """Whether the paths of a class share a known starting node."""

    KNOWN = "known"
    UNKNOWN = "unknown"


class PriorChoices(_Choices):
    """Priors used by the lower-bound constructions."""

    ORIENTED = "oriented"
    HYPERCUBE = "hypercube"


class BoundRouteChoices(_Choices):
    """How the exponential moment entering a lower bound was obtained."""

    CLOSED_FORM = "closed_form_xi"
    MONTE_CARLO = "monte_carlo"
    EXACT = "exact"


class RegimeChoices(_Choices):
    """Start regime a lower-bound report is computed for."""

    KNOWN_START = "known_start"
    UNKNOWN_START = "unknown_start"
    GENERIC = "generic"


class OutputFormatChoices(_Choices):
    """File formats written by the harness."""

    CSV = "csv"
    JSON = "json"
    SVG = "svg"
