"""Top-level model data module."""
