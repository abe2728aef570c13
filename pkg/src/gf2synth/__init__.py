"""Synthesis of ancilla-free reversible circuits for GF(2^m) arithmetic."""

__version__ = "0.1.0"
