"""Reflectance-guided contrast-accumulated histogram equalization (RG-CACHE)."""
from .image import lightness_of, load_image, reconstruct_color, save_image
from .pipeline import EnhanceConfig, combine_detail, enhance, enhance_detailed
from .retinex import Decomposition, decompose
from .smoothing import SmootherConfig, SolverError, smooth
from .weights import PyramidConfig, intensity_weights, reflectance_weights

__all__ = [
    "Decomposition",
    "EnhanceConfig",
    "PyramidConfig",
    "SmootherConfig",
    "SolverError",
    "combine_detail",
    "decompose",
    "enhance",
    "enhance_detailed",
    "intensity_weights",
    "lightness_of",
    "load_image",
    "reconstruct_color",
    "reflectance_weights",
    "save_image",
    "smooth",
]
