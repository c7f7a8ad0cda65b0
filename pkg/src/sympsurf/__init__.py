"""Numerical invariants and coordinates for framed symplectic surface-group
representations: Maslov and Souriau indices, matrix cross ratios and
lambda-lengths, canonical forms of pairs of symmetric forms, ideal
triangulations with flips, quiver holonomy charts, and component counting."""

__version__ = "0.1.0"
