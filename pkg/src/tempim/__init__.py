"""Influence matrices of kicked Ising chains as temporal matrix-product states."""

__version__ = "0.1.0"
