"""System, channel and observation models."""
