"""Gradient-based OSPF link-weight optimization toolkit."""

__version__ = "0.1.0"
