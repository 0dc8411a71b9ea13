"""Lipschitz-continuous randomized dynamic programming on bounded-treewidth graphs."""

__version__ = "0.1.0"
