"""Simulation of coincidence imaging with polarisation- and momentum-entangled photon pairs."""

__version__ = "0.1.0"
