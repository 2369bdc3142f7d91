"""Verification, classification and simulation of quantum error correcting
and error avoiding codes for finite operator-sum noise models."""

__version__ = "0.1.0"
