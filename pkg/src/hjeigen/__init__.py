"""Additive eigenvalues of periodic Hamilton-Jacobi equations via minimax formulas."""

__version__ = "0.1.0"
