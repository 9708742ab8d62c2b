"""Feed-forward network, optimizer and model files."""
