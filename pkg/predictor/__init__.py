"""Iterated forecasting and curriculum training."""
