"""Analog Beamtrack - Kalman tracking through an optimally beamformed analog sensor network."""

__version__ = "0.1.0"
