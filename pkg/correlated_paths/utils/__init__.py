"""Helper modules for correlated_paths."""
