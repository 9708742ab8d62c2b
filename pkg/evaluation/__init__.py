"""Horizon evaluation, overlays and robot-in-the-loop checks."""
