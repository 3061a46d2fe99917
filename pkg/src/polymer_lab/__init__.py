"""Simulation and verification suite for directed polymers in weak disorder."""

__version__ = "0.1.0"
