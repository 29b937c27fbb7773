"""File formats module."""
