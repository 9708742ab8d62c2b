"""Polynomial extrapolation baseline."""
