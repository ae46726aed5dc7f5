"""Numerics for contractive intertwining liftings and bi-isometry models."""

__version__ = "0.1.0"
