"""Simulate and analyse data drawn from sets of probability measures."""

__version__ = "0.1.0"
