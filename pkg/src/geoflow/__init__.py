"""Symbolic dynamics and thermodynamic formalism for geodesic flows."""

__version__ = "0.1.0"
