"""Coherence resource quantities for bosonic Fock states."""

__version__ = "0.1.0"
