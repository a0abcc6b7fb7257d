"""Disfluency corpus toolkit: annotation parsing, data generation, filtering and detection."""

__version__ = "0.1.0"
