"""Monte Carlo aggregate out-of-band emission model for 5G networks seen by a 23.8 GHz sounder."""

__version__ = "0.1.0"
