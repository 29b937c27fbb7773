"""Representation decoupling module."""
