"""Plotting module."""
