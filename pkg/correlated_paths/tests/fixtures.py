"""Create fixtures for tests."""

import os

from correlated_paths.config import ExperimentConfig
from correlated_paths.graph import TorusLattice
from correlated_paths.paths import PathClass

SLOW_TESTS = os.environ.get("CORRELATED_PATHS_SLOW_TESTS") == "1"


def small_lattice(d=2, m=5):
    """A lattice small enough to enumerate every class by hand."""
    return TorusLattice(d, m)


def known_start_class(d=2, m=5, k=3, oriented=False):
    """Class of paths starting at the origin."""
    return PathClass(small_lattice(d, m), k, start=0, oriented=oriented)


def small_config_data(**sections):
    """A fast experiment config dict; keyword arguments replace whole sections."""
    data = {
        "seed": 7,
        "threads": 1,
        "lattice": {"d": 2, "m": 5},
        "path_class": {"k": 3},
        "test": {"sign": "plus", "engine": "exhaustive"},
        "risk": {"psi_grid": [0.0, 0.9], "trials": 40, "panel_size": 32, "panel_trials": 20},
        "moments": {"psi_grid": [0.9], "trials": 2000},
        "bounds": {"psi_grid": [0.02, 0.05], "eit_trials": 2000, "moment_trials": 2000},
    }
    data.update(sections)
    return data


def small_config(**sections):
    """Validated version of :func:`small_config_data`."""
    return ExperimentConfig.from_dict(small_config_data(**sections))
