"""mmWave UAV cellular simulation toolkit."""

__version__ = "0.1.0"
