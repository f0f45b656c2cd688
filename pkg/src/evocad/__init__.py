"""Evolutionary generation of CAD programs with a topology-aware evaluation stack."""

__version__ = "0.1.0"
