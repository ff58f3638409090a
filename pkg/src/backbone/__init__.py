"""Backbone method for sparse regression and classification trees."""

__version__ = "0.1.0"
