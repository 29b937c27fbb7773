"""Polarimetry module."""
