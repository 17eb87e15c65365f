"""Developmentally constructed, Hebbian-learning animat controllers evolved on a prey-capture task."""

__version__ = "0.1.0"
