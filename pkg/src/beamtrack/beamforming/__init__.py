"""Sensor gain and phase optimization."""
