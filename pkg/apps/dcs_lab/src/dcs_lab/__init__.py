"""dcs-lab - seeded benchmark harness for distributed compressed sensing recovery."""

__version__ = "0.1.0"
