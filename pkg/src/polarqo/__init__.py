"""Polarization quantum optics on truncated multimode Fock spaces."""

__version__ = "0.1.0"
