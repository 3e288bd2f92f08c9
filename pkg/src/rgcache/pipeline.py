"""End-to-end enhancement: identity, HE, CACHE and RG-CACHE.

RG-CACHE runs: lightness -> illumination/reflectance -> reflectance
gradient weights -> weighted HE of the lightness (base layer ``B``) ->
``A_out = B + e * R`` -> color reconstruction.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import equalize, image, weights
from .retinex import Decomposition, decompose, render_reflectance_vis
from .smoothing import SmootherConfig, make_smoother

METHODS = ("identity", "he", "cache", "rg-cache")


@dataclass(frozen=True)
class EnhanceConfig:
    method: str = "rg-cache"
    detail: float = 0.5
    pyramid: weights.PyramidConfig = field(default_factory=weights.PyramidConfig)
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    K: int = 256

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.detail >= 0:
            raise ValueError("detail must be >= 0")
        if self.K < 2:
            raise ValueError("K must be >= 2")


@dataclass
class EnhanceResult:
    """Output image plus timings; the other fields are filled on request."""

    image: np.ndarray
    total_seconds: float = 0.0
    smooth_seconds: float = 0.0
    lightness_in: np.ndarray | None = None
    lightness_out: np.ndarray | None = None
    decomposition: Decomposition | None = None
    weights: np.ndarray | None = None
    histogram: equalize.HistogramModel | None = None
    mapping: equalize.IntensityMapping | None = None


def combine_detail(b, r, e: float, valid=None) -> np.ndarray:
    """``clip(B + e * R, 0, 1)``; ``B`` in [0, 1] units, ``R`` in log10 units."""
    b = np.asarray(b, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if b.shape != r.shape:
        raise ValueError(f"shape mismatch: base {b.shape} vs reflectance {r.shape}")
    if valid is not None:
        r = np.where(valid, r, 0.0)
    return np.clip(b + e * r, 0.0, 1.0)


def _timed_smoother(smoother):
    elapsed = [0.0]

    def run(a):
        t0 = time.perf_counter()
        try:
            return smoother(a)
        finally:
            elapsed[0] += time.perf_counter() - t0

    return run, elapsed


def enhance_detailed(
    c_in,
    cfg: EnhanceConfig | None = None,
    *,
    smoother: Callable[[np.ndarray], np.ndarray] | None = None,
    keep_intermediates: bool = False,
) -> EnhanceResult:
    """Run ``cfg.method`` on ``c_in`` and report timings.

    ``smoother`` replaces the configured illumination smoother (used by
    RG-CACHE only).
    """
    cfg = cfg or EnhanceConfig()
    t0 = time.perf_counter()
    c_in = image.as_color_image(c_in)
    if cfg.method == "identity":
        return EnhanceResult(image=c_in.copy(), total_seconds=time.perf_counter() - t0)

    a_in = image.lightness_of(c_in)
    decomp = None
    phi = None
    smooth_seconds = 0.0
    if cfg.method == "he":
        hist = equalize.plain_histogram(a_in, cfg.K)
    elif cfg.method == "cache":
        phi = weights.intensity_weights(a_in, cfg.pyramid)
        hist = equalize.weighted_histogram(a_in, phi, cfg.K)
    else:
        timed, elapsed = _timed_smoother(smoother or make_smoother(cfg.smoother))
        decomp = decompose(a_in, smoother=timed)
        smooth_seconds = elapsed[0]
        phi = weights.reflectance_weights(decomp, cfg.pyramid)
        hist = equalize.weighted_histogram(a_in, phi, cfg.K)
    mapping = equalize.mapping_from(hist)
    a_out = equalize.apply_mapping(a_in, mapping)
    if decomp is not None:
        a_out = combine_detail(a_out, decomp.reflectance, cfg.detail, decomp.valid)
    c_out = image.reconstruct_color(c_in, a_in, a_out)

    result = EnhanceResult(
        image=c_out,
        total_seconds=time.perf_counter() - t0,
        smooth_seconds=smooth_seconds,
    )
    if keep_intermediates:
        result.lightness_in = a_in
        result.lightness_out = a_out
        result.decomposition = decomp
        result.weights = phi
        result.histogram = hist
        result.mapping = mapping
    return result


def enhance(c_in, cfg: EnhanceConfig | None = None, *, smoother=None) -> np.ndarray:
    """Enhanced color image; see :func:`enhance_detailed`."""
    return enhance_detailed(c_in, cfg, smoother=smoother).image


def dump_intermediates(result: EnhanceResult, outdir, stem: str = "out") -> list[Path]:
    """Write whatever intermediates ``result`` carries; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if result.decomposition is not None:
        p = outdir / f"{stem}_illumination.png"
        image.save_gray(result.decomposition.illumination, p, normalize=False)
        written.append(p)
        p = outdir / f"{stem}_reflectance.png"
        image.save_image(render_reflectance_vis(result.decomposition), p)
        written.append(p)
    if result.weights is not None:
        p = outdir / f"{stem}_weights.png"
        image.save_gray(result.weights, p)
        written.append(p)
    if result.lightness_out is not None:
        p = outdir / f"{stem}_lightness.png"
        image.save_gray(result.lightness_out, p, normalize=False)
        written.append(p)
    if result.histogram is not None:
        p = outdir / f"{stem}_histogram.csv"
        equalize.write_histogram_csv(p, result.histogram, result.mapping)
        written.append(p)
    return written
