"""Majorant-kernel toolkit for nonlinear parabolic integral equations."""
__version__ = "0.1.0"
