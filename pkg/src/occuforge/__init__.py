"""Multistep occupancy forecasting for EV chargers."""

__version__ = "0.1.0"
