"""Unit tests for correlated_paths."""
