"""Illumination / log-reflectance decomposition of lightness."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .smoothing import SmootherConfig, make_smoother


@dataclass(frozen=True)
class Decomposition:
    """Illumination ``I``, log10 reflectance ``R`` and its validity mask.

    Invalid pixels (zero lightness or zero illumination) have ``R == 0``.
    """

    illumination: np.ndarray
    reflectance: np.ndarray
    valid: np.ndarray


def log_reflectance(a_in, illumination) -> tuple[np.ndarray, np.ndarray]:
    """``log10(a_in / illumination)`` where both are positive, else 0."""
    a_in = np.asarray(a_in, dtype=np.float64)
    illumination = np.asarray(illumination, dtype=np.float64)
    if a_in.shape != illumination.shape:
        raise ValueError(f"shape mismatch: {a_in.shape} vs {illumination.shape}")
    valid = (a_in > 0.0) & (illumination > 0.0)
    r = np.zeros_like(a_in)
    r[valid] = np.log10(a_in[valid] / illumination[valid])
    return r, valid


def decompose(
    a_in,
    config: SmootherConfig | None = None,
    smoother: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Decomposition:
    """Smooth ``a_in`` into illumination and take the log10 ratio as reflectance.

    ``smoother`` overrides ``config`` when given.
    """
    a_in = np.asarray(a_in, dtype=np.float64)
    smoother = smoother or make_smoother(config)
    illumination = np.asarray(smoother(a_in), dtype=np.float64)
    if illumination.shape != a_in.shape:
        raise ValueError(f"smoother changed the shape: {a_in.shape} -> {illumination.shape}")
    r, valid = log_reflectance(a_in, illumination)
    return Decomposition(illumination=illumination, reflectance=r, valid=valid)


def render_reflectance_vis(d: Decomposition, percentile: float = 99.0) -> np.ndarray:
    """Signed reflectance as color: positive red, negative blue, invalid green.

    Magnitudes are scaled by the given percentile of ``|R|`` over valid
    pixels and clipped to 1.
    """
    r = d.reflectance
    h, w = r.shape
    out = np.zeros((h, w, 3))
    mags = np.abs(r[d.valid])
    scale = np.percentile(mags, percentile) if mags.size else 0.0
    if scale <= 0.0 and mags.size:
        scale = mags.max()
    if scale > 0.0:
        out[..., 0] = np.clip(np.maximum(r, 0.0) / scale, 0.0, 1.0)
        out[..., 2] = np.clip(np.maximum(-r, 0.0) / scale, 0.0, 1.0)
    out[~d.valid] = (0.0, 1.0, 0.0)
    return out
