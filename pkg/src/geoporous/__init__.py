"""Numerical certification toolkit for porosity of strict contractions in
spaces of nonexpansive mappings over geodesic spaces."""
from __future__ import annotations

from geoporous.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
