"""Indeterminism and signalling budgets for CHSH correlations."""

__version__ = "0.1.0"
