"""Weighted nuclear-norm recovery of low-rank matrices from subspace priors."""

__version__ = "0.1.0"
