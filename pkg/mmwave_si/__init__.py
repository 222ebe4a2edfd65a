"""Beamformed self-interference modeling and analysis for colocated mmWave phased arrays."""

__version__ = "0.1.0"
