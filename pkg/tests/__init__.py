"""Tests for beamtrack."""
