"""Venture fund economics: the standard GP-LP fund against a distributed, pod-based firm."""

__version__ = "0.1.0"
