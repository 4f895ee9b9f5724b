"""AFDM over time-scaled wideband doubly-dispersive channels."""

__version__ = "0.1.0"
