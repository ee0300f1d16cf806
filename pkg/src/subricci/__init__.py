"""Curvature invariants and Riccati comparison for 3D contact subriemannian structures."""

__version__ = "0.1.0"
