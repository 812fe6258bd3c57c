"""Shared utilities for the dcs-lab workspace."""

__version__ = "0.1.0"
