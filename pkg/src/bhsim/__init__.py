"""Exact-diagonalisation dynamics of attractive Bose-Hubbard transmon chains."""

__version__ = "0.1.0"
