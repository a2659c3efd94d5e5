"""Quadratic forms in prime variables: exact structure theory and numerical experiments."""

__version__ = "0.1.0"
