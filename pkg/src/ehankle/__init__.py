"""Desk-scale design toolkit for an electro-hydraulic ankle prosthesis."""

__version__ = "0.1.0"
