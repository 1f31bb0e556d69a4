"""Pseudo-spectral simulation and Fourier analysis of the isothermal damped Euler system."""

__version__ = "0.1.0"
