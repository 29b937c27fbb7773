"""Slide preparation module."""
