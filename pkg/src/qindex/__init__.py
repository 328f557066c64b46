"""Meromorphic 3D-index state integrals and tetrahedron-index q-series."""

__version__ = "0.1.0"
