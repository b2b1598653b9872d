"""Quadratic sieve factorization, classical and on a sparse state-vector simulator."""

__version__ = "0.1.0"
