"""Causal structure of the Einstein universe and its universal cover."""

__version__ = "0.1.0"
