"""Numerical verification of pseudo-bihermitian and generalized
pseudo-Kahler geometry on model 4- and 6-manifolds."""

__version__ = "0.1.0"
