"""Trajectory data types, windowing and CSV files."""
