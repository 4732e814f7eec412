"""Metagrating-assisted planar antenna design toolkit."""
__version__ = "0.1.0"
