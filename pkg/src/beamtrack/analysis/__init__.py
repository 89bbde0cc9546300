"""Closed-form performance analysis."""
