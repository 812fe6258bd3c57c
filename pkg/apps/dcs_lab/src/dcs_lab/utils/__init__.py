"""Configuration models, graph nodes and output helpers for the harness."""
