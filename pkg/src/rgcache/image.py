"""Image containers, file I/O, lightness extraction and color reconstruction.

Color images are ``(H, W, 3)`` float64 arrays with channels in ``[0, 1]``;
lightness maps are ``(H, W)`` float64 arrays in ``[0, 1]``.  Only PNG and
binary PPM (P6) are read; output is always 8 bits per channel.
"""
from __future__ import annotations

import os
from pathlib import Path

import cv2
import numpy as np

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class ImageFormatError(ValueError):
    """Raised for unsupported, malformed or empty image files."""


def as_color_image(data) -> np.ndarray:
    """Validate ``data`` as a color image and return it as float64."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) array, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must have at least one pixel")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("channel values must lie in [0, 1]")
    return img


def as_lightness(data) -> np.ndarray:
    a = np.asarray(data, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a non-empty (H, W) array, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0:
        raise ValueError("lightness values must lie in [0, 1]")
    return a


def round_half_up(x):
    """Round non-negative values half away from zero."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def to_uint8(values) -> np.ndarray:
    return np.clip(round_half_up(np.asarray(values) * 255.0), 0, 255).astype(np.uint8)


def _read_ppm(raw: bytes) -> np.ndarray:
    # header: P6 <ws> width <ws> height <ws> maxval <single ws> data; '#' comments allowed
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(raw):
            raise ImageFormatError("truncated PPM header")
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"bad PPM header: {tokens!r}") from exc
    if width < 1 or height < 1:
        raise ImageFormatError("zero-dimension image")
    if maxval == 255:
        dtype = np.dtype(np.uint8)
    elif maxval == 65535:
        dtype = np.dtype(">u2")
    else:
        raise ImageFormatError(f"unsupported PPM maxval {maxval} (need 255 or 65535)")
    count = width * height * 3
    if len(raw) - pos < count * dtype.itemsize:
        raise ImageFormatError("truncated PPM pixel data")
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    return data.reshape(height, width, 3).astype(np.float64) / maxval


def _read_png(path: Path) -> np.ndarray:
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ImageFormatError(f"could not decode PNG {path}")
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageFormatError(f"unsupported PNG sample type {arr.dtype}")
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    elif arr.shape[2] == 2:
        # gray + alpha; alpha is ignored
        arr = np.repeat(arr[:, :, :1], 3, axis=2)
    else:
        arr = arr[:, :, 2::-1]  # BGR(A) -> RGB
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImageFormatError("zero-dimension image")
    return np.ascontiguousarray(arr, dtype=np.float64) / scale


def load_image(path) -> np.ndarray:
    """Read a PNG or binary PPM (P6) file as an ``(H, W, 3)`` float image.

    Samples are divided by ``2**bits - 1``; grayscale files are expanded
    to three equal channels.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if raw.startswith(PNG_MAGIC):
        return _read_png(path)
    if raw[:2] == b"P6":
        return _read_ppm(raw)
    raise ImageFormatError(f"{path}: not a PNG or binary PPM (P6) file")


def save_image(image, path) -> None:
    """Write an image as 8-bit PNG or PPM, chosen by the file suffix.

    A 2-D array is written as a gray image (expanded to RGB for PPM).
    Channel bytes are ``round(255 * v)`` with halves rounded up.
    """
    path = Path(path)
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    img = as_color_image(img)
    data = to_uint8(img)
    suffix = path.suffix.lower()
    if suffix == ".png":
        ok, buf = cv2.imencode(".png", np.ascontiguousarray(data[:, :, ::-1]))
        if not ok:
            raise OSError(f"PNG encoding failed for {path}")
        payload = buf.tobytes()
    elif suffix in (".ppm", ".pnm"):
        h, w = data.shape[:2]
        payload = f"P6\n{w} {h}\n255\n".encode("ascii") + data.tobytes()
    else:
        raise ImageFormatError(f"unsupported output format {suffix!r}; use .png or .ppm")
    path.write_bytes(payload)


def save_gray(values, path, normalize: bool = True) -> None:
    """Write a scalar field as a gray image, optionally divided by its max."""
    v = np.asarray(values, dtype=np.float64)
    if normalize:
        peak = v.max() if v.size else 0.0
        v = v / peak if peak > 0 else np.zeros_like(v)
    save_image(np.clip(v, 0.0, 1.0), path)


def lightness_of(image) -> np.ndarray:
    """Per-pixel max of R, G, B (the HSV value channel)."""
    return np.asarray(image, dtype=np.float64).max(axis=2)


def reconstruct_color(c_in, a_in, a_out) -> np.ndarray:
    """Scale each pixel's RGB so its max channel becomes ``a_out``.

    ``C_out = C_in / a_in * a_out``; pixels with ``a_in == 0`` carry no
    chroma and become gray ``(a_out, a_out, a_out)``.
    """
    c_in = np.asarray(c_in, dtype=np.float64)
    a_in = np.asarray(a_in, dtype=np.float64)
    a_out = np.asarray(a_out, dtype=np.float64)
    if c_in.shape[:2] != a_in.shape or a_in.shape != a_out.shape or c_in.ndim != 3:
        raise ValueError(
            f"dimension mismatch: c_in {c_in.shape}, a_in {a_in.shape}, a_out {a_out.shape}"
        )
    if np.any(c_in > a_in[:, :, None] + 1e-9):
        raise ValueError("a_in is not the lightness of c_in (a channel exceeds it)")
    dark = a_in <= 0.0
    safe = np.where(dark, 1.0, a_in)
    out = c_in / safe[:, :, None] * a_out[:, :, None]
    out[dark] = a_out[dark][:, None]
    return np.clip(out, 0.0, 1.0)


def is_image_file(path) -> bool:
    return os.path.splitext(str(path))[1].lower() in (".png", ".ppm", ".pnm")
