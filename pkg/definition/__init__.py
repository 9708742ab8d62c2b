"""Channel and task definitions."""
