"""Plain and weighted histograms, the HE mapping rule and LUT application."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .image import round_half_up


@dataclass(frozen=True)
class HistogramModel:
    """Density ``p``, its running sum ``cdf`` and, for plain histograms, counts."""

    density: np.ndarray
    cdf: np.ndarray
    n: int
    counts: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.density.size


@dataclass(frozen=True)
class IntensityMapping:
    """Integer LUT ``table`` and the unrounded ``table_real = (K-1) * cdf``."""

    table: np.ndarray
    table_real: np.ndarray

    @property
    def K(self) -> int:
        return self.table.size


def quantize(values, K: int = 256) -> np.ndarray:
    """Map ``[0, 1]`` to bin indices ``round(v * (K - 1))``."""
    q = round_half_up(np.asarray(values, dtype=np.float64) * (K - 1))
    return np.clip(q, 0, K - 1).astype(np.int64)


def _check_K(K: int) -> None:
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")


def _model(density: np.ndarray, n: int, counts=None) -> HistogramModel:
    return HistogramModel(density=density, cdf=np.cumsum(density), n=n, counts=counts)


def plain_histogram(a, K: int = 256) -> HistogramModel:
    _check_K(K)
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError("cannot build a histogram of an empty image")
    counts = np.bincount(quantize(a, K).ravel(), minlength=K)
    return _model(counts / a.size, a.size, counts)


def weighted_histogram(a, phi, K: int = 256) -> HistogramModel:
    """Histogram where every pixel adds its weight ``phi`` to its bin.

    Weights are first divided by their maximum; that leaves the density
    unchanged and makes uniform weights reproduce
    :func:`plain_histogram` bit for bit.
    """
    _check_K(K)
    a = np.asarray(a)
    phi = np.asarray(phi, dtype=np.float64)
    if a.shape != phi.shape:
        raise ValueError(f"shape mismatch: image {a.shape} vs weights {phi.shape}")
    if a.size == 0:
        raise ValueError("cannot build a histogram of an empty image")
    if not np.all(phi > 0.0) or not np.all(np.isfinite(phi)):
        raise ValueError("weights must be finite and strictly positive")
    w = (phi / phi.max()).ravel()
    mass = np.bincount(quantize(a, K).ravel(), weights=w, minlength=K)
    return _model(mass / mass.sum(), a.size)


def mapping_from(h: HistogramModel) -> IntensityMapping:
    """HE rule ``T(k) = round((K - 1) * P(k))``."""
    real = (h.K - 1) * h.cdf
    table = np.clip(round_half_up(real), 0, h.K - 1).astype(np.int64)
    return IntensityMapping(table=table, table_real=real)


def apply_mapping(a, m: IntensityMapping) -> np.ndarray:
    """Look up ``T(quantize(a))`` and rescale to ``[0, 1]``."""
    return m.table[quantize(a, m.K)] / (m.K - 1)


def write_histogram_csv(path, h: HistogramModel, m: IntensityMapping | None = None) -> None:
    """CSV with columns ``k, p, P, T`` (``T`` empty without a mapping)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "p", "P", "T"])
        for k in range(h.K):
            t = "" if m is None else int(m.table[k])
            writer.writerow([k, repr(float(h.density[k])), repr(float(h.cdf[k])), t])
