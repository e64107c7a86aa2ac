"""DEAP preprocessed archive to PSR1 converter."""

__version__ = "0.1.0"
