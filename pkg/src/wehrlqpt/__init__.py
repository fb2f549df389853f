"""Wehrl entropy of ground-state Husimi functions as a probe of quantum phase transition order."""

__version__ = "0.1.0"
