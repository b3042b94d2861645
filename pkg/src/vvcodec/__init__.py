"""Grayscale quadtree codec with hierarchical V-cluster quantization,
a fractal block coding baseline, quality metrics, and generators for the
underlying contractive-system mathematics."""

from . import clustering, fbc, fractalgen, imaging, metrics, vvar
from .imaging import FormatError, PixelImage, load_pgm, save_pgm

__version__ = "0.1.0"

__all__ = [
    "FormatError",
    "PixelImage",
    "clustering",
    "fbc",
    "fractalgen",
    "imaging",
    "load_pgm",
    "metrics",
    "save_pgm",
    "vvar",
]
