"""Coordinated multi-agent TD3 for inter-cell inter-slice radio resource partitioning, with transfer learning."""

__version__ = "0.1.0"
