"""Fusion-center estimation."""
