"""High-order regularized single and double layer potentials on closed surfaces."""
from .regularization import RegConfig
from .surfaces import Sphere, Ellipsoid, MolecularSurface
from .quadrature import build_quadrature
from .backend import BACKEND

__all__ = ["RegConfig", "Sphere", "Ellipsoid", "MolecularSurface", "build_quadrature", "BACKEND"]
