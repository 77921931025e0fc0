"""Hartree-Fock exchange effects in atoms: SCF, tails, scattering and models."""

__version__ = "0.1.0"
