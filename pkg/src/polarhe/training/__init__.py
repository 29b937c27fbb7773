"""Toy dual-encoder training module."""
