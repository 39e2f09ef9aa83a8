"""Planning through contact for dexterous ungrasping of planar objects."""

__version__ = "0.1.0"
