"""Matrix models for half-liberated complex spheres and unitary quantum groups."""

__version__ = "0.1.0"
