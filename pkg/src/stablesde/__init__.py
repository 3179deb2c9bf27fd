"""Euler schemes and density tools for SDEs driven by stable noise with singular drift."""
__version__ = "0.1.0"
