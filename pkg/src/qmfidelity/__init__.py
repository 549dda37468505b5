"""Entanglement fidelity of ensemble quantum memories."""

__version__ = "0.1.0"
