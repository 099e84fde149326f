"""Circuits, simulation and verification for low-overhead error-detected entangling primitives."""
from .circuit import Circuit, CircuitError, CircuitStats, Op

__version__ = "0.1.0"

__all__ = ["Circuit", "CircuitError", "CircuitStats", "Op"]
