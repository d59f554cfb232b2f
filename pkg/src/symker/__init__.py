"""Kernels, maximal operators and weight classes on hyperbolic 3-space."""
__version__ = "0.1.0"
