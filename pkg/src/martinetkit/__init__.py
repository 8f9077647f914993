"""Symbolic-numeric tools for rank-two polynomial distributions in 3-space."""
from .poly import Poly, parse
from .vfield import VecField
from .martinet import Distribution, MartinetData

__all__ = ["Poly", "parse", "VecField", "Distribution", "MartinetData"]
__version__ = "0.1.0"
