"""Quality metrics on 8-bit quantized lightness: DE, EME, PD and PCQI.

All functions take lightness maps in ``[0, 1]`` and quantize them to
``0..255`` before measuring.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .equalize import quantize

LEVELS = 256


@dataclass(frozen=True)
class QualityScores:
    de: float
    eme: float
    pd: float
    pcqi: float

    def as_dict(self) -> dict:
        return asdict(self)


def _levels(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a non-empty 2-D lightness map, got shape {a.shape}")
    return quantize(a, LEVELS)


def _density(a) -> np.ndarray:
    q = _levels(a)
    return np.bincount(q.ravel(), minlength=LEVELS) / q.size


def discrete_entropy(a) -> float:
    """Shannon entropy in bits of the 256-bin histogram."""
    p = _density(a)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def eme(a, block: int = 8) -> float:
    """Mean over non-overlapping ``block x block`` tiles of ``20 log10(max / min)``.

    Leftover rows and columns are dropped; both ``max`` and ``min`` are
    floored at 1 so that dark tiles stay finite.
    """
    q = _levels(a).astype(np.float64)
    h, w = q.shape
    if h < block or w < block:
        raise ValueError(f"image {w}x{h} is smaller than one {block}x{block} block")
    nh, nw = h // block, w // block
    tiles = q[: nh * block, : nw * block].reshape(nh, block, nw, block)
    hi = np.maximum(tiles.max(axis=(1, 3)), 1.0)
    lo = np.maximum(tiles.min(axis=(1, 3)), 1.0)
    return float(np.mean(20.0 * np.log10(hi / lo))) + 0.0


def pix_dist(a) -> float:
    """Expected ``|i - j|`` for two pixels drawn independently (self-pairs included)."""
    p = _density(a)
    k = np.arange(LEVELS, dtype=np.float64)
    dist = np.abs(k[:, None] - k[None, :])
    return float(p @ dist @ p)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _window_mean(x, g, stride):
    half = g.size // 2
    m = correlate1d(correlate1d(x, g, axis=0, mode="nearest"), g, axis=1, mode="nearest")
    return m[half : x.shape[0] - half : stride, half : x.shape[1] - half : stride]


def pcqi(reference, test, patch: int = 11, stride: int = 4, c: float = 3.0) -> float:
    """Patch-based contrast quality index of ``test`` against ``reference``.

    Each Gaussian-weighted patch is compared on mean intensity, contrast
    strength and structure; the score is the mean product over patches
    sampled every ``stride`` pixels.  ``pcqi(x, x) == 1``; values above 1
    mean contrast was gained.
    """
    x = _levels(reference).astype(np.float64)
    y = _levels(test).astype(np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.shape[0] < patch or x.shape[1] < patch:
        raise ValueError(f"image {x.shape[1]}x{x.shape[0]} is smaller than one {patch}x{patch} patch")
    g = _gaussian_window(patch)
    mu_x = _window_mean(x, g, stride)
    mu_y = _window_mean(y, g, stride)
    var_x = np.maximum(_window_mean(x * x, g, stride) - mu_x * mu_x, 0.0)
    var_y = np.maximum(_window_mean(y * y, g, stride) - mu_y * mu_y, 0.0)
    cov = _window_mean(x * y, g, stride) - mu_x * mu_y

    intensity = np.exp(-np.abs(mu_x - mu_y) / LEVELS)
    strength = (4.0 / np.pi) * np.arctan((cov + c) / (var_x + c))
    structure = (cov + c) / (np.sqrt(var_x) * np.sqrt(var_y) + c)
    score = intensity * strength * structure
    return math.fsum(score.ravel()) / score.size


def quality_scores(reference, test) -> QualityScores:
    """All four metrics of ``test``; PCQI is taken against ``reference``."""
    return QualityScores(
        de=discrete_entropy(test),
        eme=eme(test),
        pd=pix_dist(test),
        pcqi=pcqi(reference, test),
    )
