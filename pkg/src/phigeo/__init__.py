"""Geodesics of quadratic differentials near a zero, sector words, Bonnet
deformations of CMC surfaces and umbilic index audits."""

from .qdiff import QuadraticDifferential, monomial

__version__ = "0.1.0"
SCHEMA_VERSION = 1

__all__ = ["QuadraticDifferential", "monomial", "SCHEMA_VERSION", "__version__"]
