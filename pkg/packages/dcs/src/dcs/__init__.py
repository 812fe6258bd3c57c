"""Distributed compressed sensing: ensembles, sensing, l1 recovery and joint reconstruction."""

__version__ = "0.1.0"
