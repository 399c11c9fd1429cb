"""Spiking simulation of a rewrite-rule symbol system."""

__version__ = "0.1.0"
