"""Excess-Green vegetation masking and binary morphology.

The mask pipeline is: standardize the image, take the per-pixel excess
green 2G - R - B, threshold it, then clean the result with a fixed
erode/dilate schedule. Masks are (H, W) bool arrays, True = vegetation.

Morphology window convention (shared with the tests' brute-force oracle):
for a (kw, kh) kernel, output pixel (u, v) reads input offsets
du in [-floor((kw-1)/2), kw-1-floor((kw-1)/2)] and likewise dv, i.e.
even kernels anchor top-left-biased. Out-of-bounds reads are background
for both operators, so border pixels erode away.
"""

from __future__ import annotations

import numpy as np

from .imagecore import ensure_f32, save_pgm, load_pgm

__all__ = [
    "excess_green",
    "binarize",
    "erode",
    "dilate",
    "refine_mask",
    "vegetation_fraction",
    "mask_to_pgm",
    "mask_from_pgm",
]

DEFAULT_THETA = 0.0


def excess_green(norm: np.ndarray) -> np.ndarray:
    """Per-pixel 2G - R - B on a standardized image; float64 field."""
    norm = ensure_f32(norm)
    r = norm[:, :, 0].astype(np.float64)
    g = norm[:, :, 1].astype(np.float64)
    b = norm[:, :, 2].astype(np.float64)
    return 2.0 * g - r - b


def binarize(field: np.ndarray, theta: float = DEFAULT_THETA) -> np.ndarray:
    """Strict threshold: True where field > theta."""
    return np.asarray(field) > theta


def _offsets(k: int) -> range:
    lo = -((k - 1) // 2)
    return range(lo, lo + k)


def _shifted(mask: np.ndarray, du: int, dv: int) -> np.ndarray:
    """mask sampled at (u+du, v+dv), False outside the image."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    src_u = slice(max(du, 0), min(w + du, w))
    dst_u = slice(max(-du, 0), max(-du, 0) + (src_u.stop - src_u.start))
    src_v = slice(max(dv, 0), min(h + dv, h))
    dst_v = slice(max(-dv, 0), max(-dv, 0) + (src_v.stop - src_v.start))
    if src_u.stop > src_u.start and src_v.stop > src_v.start:
        out[dst_v, dst_u] = mask[src_v, src_u]
    return out


def erode(mask: np.ndarray, kw: int, kh: int) -> np.ndarray:
    """AND over the rectangular window around each pixel."""
    if kw < 1 or kh < 1:
        raise ValueError("kernel dimensions must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    out = np.ones_like(mask)
    for dv in _offsets(kh):
        for du in _offsets(kw):
            out &= _shifted(mask, du, dv)
    return out


def dilate(mask: np.ndarray, kw: int, kh: int) -> np.ndarray:
    """OR over the rectangular window around each pixel."""
    if kw < 1 or kh < 1:
        raise ValueError("kernel dimensions must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(mask)
    for dv in _offsets(kh):
        for du in _offsets(kw):
            out |= _shifted(mask, du, dv)
    return out


def refine_mask(mask: np.ndarray) -> np.ndarray:
    """Fixed cleanup schedule: 2 rounds of (2,2) erosion, then 4 rounds of
    (6,6) dilation."""
    out = np.asarray(mask, dtype=bool)
    for _ in range(2):
        out = erode(out, 2, 2)
    for _ in range(4):
        out = dilate(out, 6, 6)
    return out


def vegetation_fraction(mask: np.ndarray) -> float:
    """Fraction of pixels flagged as vegetation, in [0, 1]."""
    mask = np.asarray(mask, dtype=bool)
    return float(mask.sum()) / mask.size


def mask_to_pgm(mask: np.ndarray) -> bytes:
    """Serialize as binary PGM with values 0/255 for CLI inspection."""
    return save_pgm(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def mask_from_pgm(data: bytes) -> np.ndarray:
    return load_pgm(data) > 127
