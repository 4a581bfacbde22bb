"""Discrete exterior calculus on spheres for the generalized Hopf invariant,
k-dilation estimates, a homotopy audit and the squeeze construction."""

__version__ = "0.1.0"
