"""Jitter simulation, pre-correction and evaluation for linear-array pushbroom images."""

__version__ = "0.1.0"
