"""Ising instances, spectral simplicity checks, Hopfield-Tank dynamics and exact solvers."""

__version__ = "0.1.0"
