"""Potential-based reward shaping and advice for stochastic policy learning."""

__version__ = "0.1.0"
