"""Exact-arithmetic reduction toolkit: group presentations to triangle matroids, inflation, expansions and certificates."""

__version__ = "0.1.0"
