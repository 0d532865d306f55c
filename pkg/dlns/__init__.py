"""Distributed large neighborhood search for DCOPs with anytime bounds"""

__version__ = "0.1.0"
