"""Homozygosity of hierarchical Dirichlet processes: exact moments, limits and simulation."""

__version__ = "0.1.0"
