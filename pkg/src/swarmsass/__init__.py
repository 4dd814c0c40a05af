"""Deterministic needs-driven multi-agent swarm simulation."""

__version__ = "0.1.0"
