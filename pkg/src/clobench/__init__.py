"""Workbench for monotone circuits with local oracles on the k-clique test sets."""

__version__ = "0.1.0"
