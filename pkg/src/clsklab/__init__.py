"""Cluster shift keying (CLSK) simulation laboratory."""

__version__ = "0.1.0"
