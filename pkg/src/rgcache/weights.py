"""Spatial importance weights for the weighted histogram.

The weight of a pixel is the sum of absolute differences to its 4-connected
neighbours, measured on every level of a bicubic pyramid and merged per
pixel by a geometric mean at full resolution.  Reflectance is the source
for RG-CACHE; raw lightness gives the CACHE baseline.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .retinex import Decomposition


@dataclass(frozen=True)
class PyramidConfig:
    levels: int = 4
    eps_phi: float = 1e-6

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.eps_phi <= 0:
            raise ValueError("eps_phi must be > 0")


def cubic_kernel(x, a: float = -0.5):
    """Keys cubic convolution kernel; ``a = -0.5`` is Catmull-Rom."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2, x3 = x * x, x * x * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


@lru_cache(maxsize=64)
def resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Dense ``(n_out, n_in)`` 1-D bicubic resampling operator.

    Pixel centres are aligned (``u = (x + 0.5) * n_in / n_out - 0.5``).
    When shrinking, the kernel is stretched by the reduction factor to
    low-pass the signal.  Out-of-range taps are clamped to the border.
    """
    scale = n_out / n_in
    kscale = min(scale, 1.0)
    support = 4.0 / kscale
    u = (np.arange(n_out) + 0.5) / scale - 0.5
    left = np.floor(u - support / 2.0).astype(np.int64)
    taps = int(np.ceil(support)) + 2
    idx = left[:, None] + np.arange(taps)[None, :]
    wts = kscale * cubic_kernel(kscale * (u[:, None] - idx))
    wts /= wts.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, n_in - 1)
    mat = np.zeros((n_out, n_in))
    rows = np.repeat(np.arange(n_out), taps)
    np.add.at(mat, (rows, idx.ravel()), wts.ravel())
    mat.setflags(write=False)
    return mat


def resize(field, shape) -> np.ndarray:
    """Bicubic resize of a 2-D field to ``shape = (height, width)``."""
    field = np.asarray(field, dtype=np.float64)
    h, w = field.shape
    th, tw = shape
    if (h, w) == (th, tw):
        return field.copy()
    return resample_matrix(h, th) @ field @ resample_matrix(w, tw).T


def pyramid_shapes(shape, levels: int) -> list[tuple[int, int]]:
    """Level sizes by ceil-halving; stops early if a side would drop below 2."""
    shapes = [tuple(shape)]
    while len(shapes) < levels:
        h, w = shapes[-1]
        nh, nw = -(-h // 2), -(-w // 2)
        if nh < 2 or nw < 2 or (nh, nw) == (h, w):
            break
        shapes.append((nh, nw))
    return shapes


def build_pyramid(field, levels: int) -> list[np.ndarray]:
    """``[field, down(field), down(down(field)), ...]``, at most ``levels`` long."""
    field = np.asarray(field, dtype=np.float64)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    out = [field]
    for shape in pyramid_shapes(field.shape, levels)[1:]:
        out.append(resize(out[-1], shape))
    return out


def local_gradient(field, eps_phi: float = 1e-6) -> np.ndarray:
    """Sum of ``|r(q) - r(q')|`` over the existing up/down/left/right neighbours."""
    r = np.asarray(field, dtype=np.float64)
    if r.ndim != 2 or r.size == 0:
        raise ValueError(f"expected a non-empty 2-D field, got shape {r.shape}")
    phi = np.zeros_like(r)
    dx = np.abs(np.diff(r, axis=1))
    dy = np.abs(np.diff(r, axis=0))
    phi[:, :-1] += dx
    phi[:, 1:] += dx
    phi[:-1, :] += dy
    phi[1:, :] += dy
    return np.maximum(phi, eps_phi)


def merge_geometric(per_level, target, eps_phi: float = 1e-6) -> np.ndarray:
    """Per-pixel geometric mean of weight maps upsampled to ``target`` shape."""
    if len(per_level) == 0:
        raise ValueError("need at least one level")
    target = tuple(target)
    if len(per_level) == 1:
        only = np.asarray(per_level[0], dtype=np.float64)
        if only.shape != target:
            raise ValueError(f"level shape {only.shape} does not match target {target}")
        return only.copy()
    prod = np.ones(target)
    for phi in per_level:
        phi = np.asarray(phi, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[0] > target[0] or phi.shape[1] > target[1]:
            raise ValueError(f"level shape {phi.shape} is inconsistent with target {target}")
        # bicubic overshoot can go negative near sharp peaks
        prod *= np.maximum(resize(phi, target), eps_phi)
    return np.maximum(prod ** (1.0 / len(per_level)), eps_phi)


def multiscale_weights(field, cfg: PyramidConfig | None = None) -> np.ndarray:
    cfg = cfg or PyramidConfig()
    field = np.asarray(field, dtype=np.float64)
    levels = build_pyramid(field, cfg.levels)
    grads = [local_gradient(level, cfg.eps_phi) for level in levels]
    return merge_geometric(grads, field.shape, cfg.eps_phi)


def reflectance_weights(d: Decomposition, cfg: PyramidConfig | None = None) -> np.ndarray:
    """RG-CACHE weights from log reflectance (invalid pixels count as 0)."""
    r = np.where(d.valid, d.reflectance, 0.0)
    return multiscale_weights(r, cfg)


def intensity_weights(a_in, cfg: PyramidConfig | None = None) -> np.ndarray:
    """CACHE-baseline weights from raw lightness."""
    return multiscale_weights(a_in, cfg)
