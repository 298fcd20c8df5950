"""Package declaration for correlated_paths."""

# Metadata is read from the installed distribution. If the package is used from a plain checkout, install it first.
from importlib import metadata

__version__ = metadata.version("correlated-paths")

DEFAULT_SETTINGS = {
    "enumeration_budget": 10**7,
    "confidence_level": 0.95,
    "bootstrap_resamples": 999,
    "panel_size": 32,
    "panel_trials": 200,
    "eit_trials": 100_000,
    "moment_trials": 20_000,
}
