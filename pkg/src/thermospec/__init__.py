"""Bolometric spectroscopy of superconducting resonators: forward models and analysis pipeline."""

__version__ = "0.1.0"
