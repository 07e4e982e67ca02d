"""Dissipative structure of symmetric hyperbolic systems with relaxation."""

__version__ = "0.1.0"
