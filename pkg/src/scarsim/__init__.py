"""Floquet simulation of exact quantum many-body scars on cross-resonance qubit chains."""

__version__ = "0.1.0"
