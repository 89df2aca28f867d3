"""Image containers, netpbm codecs, resampling, and normalization.

Images are plain numpy arrays:

* byte image: shape ``(H, W, 3)``, dtype uint8, interleaved R,G,B
* float image: shape ``(H, W, 3)``, dtype float32, unbounded finite reals

Array indexing is ``img[v, u]`` with ``u`` the column (x) and ``v`` the
row (y). Conversion back to bytes clamps to [0, 255] and rounds half away
from zero; that rule is load-bearing for byte-exact reproducibility and
lives in :func:`u8_from_float`.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "CodecError",
    "ensure_u8",
    "ensure_f32",
    "u8_from_float",
    "f32_from_u8",
    "load_ppm",
    "save_ppm",
    "load_pgm",
    "save_pgm",
    "normalize_image",
    "bilinear_sample",
    "bilinear_sample_grid",
    "bilinear_resize",
    "flip_x",
    "flip_y",
]

NORM_EPS = 1e-8


class CodecError(ValueError):
    """Malformed netpbm payload; the message names the offending field."""


def ensure_u8(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got dtype {img.dtype}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"empty image: shape {img.shape}")
    return img


def ensure_f32(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.float32:
        raise ValueError(f"expected float32 image, got dtype {img.dtype}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("float image contains non-finite values")
    return img


def u8_from_float(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255], round half away from zero, cast to uint8."""
    clamped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 255.0)
    return np.floor(clamped + 0.5).astype(np.uint8)


def f32_from_u8(img: np.ndarray) -> np.ndarray:
    return ensure_u8(img).astype(np.float32)


# ---------------------------------------------------------------------------
# netpbm codecs (binary P6 / P5, maxval 255)
# ---------------------------------------------------------------------------

def _read_header_token(data: bytes, pos: int, field: str) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise CodecError(f"truncated header: missing {field}")
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def _parse_netpbm(data: bytes, magic: bytes, channels: int) -> np.ndarray:
    if data[:2] != magic:
        raise CodecError(f"bad magic: expected {magic.decode()}")
    pos = 2
    dims = []
    for field in ("width", "height", "maxval"):
        token, pos = _read_header_token(data, pos, field)
        try:
            value = int(token)
        except ValueError:
            raise CodecError(f"invalid {field}: {token!r}") from None
        dims.append(value)
    width, height, maxval = dims
    if width < 1:
        raise CodecError(f"invalid width: {width}")
    if height < 1:
        raise CodecError(f"invalid height: {height}")
    if maxval != 255:
        raise CodecError(f"unsupported maxval: {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = width * height * channels
    payload = data[pos:pos + expected]
    if len(payload) != expected:
        raise CodecError(
            f"truncated pixel data: expected {expected} bytes, got {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(height, width).copy()
    return arr.reshape(height, width, channels).copy()


def load_ppm(data: bytes) -> np.ndarray:
    """Decode a binary P6 PPM (maxval 255) to a byte image, pixel-exact."""
    return _parse_netpbm(data, b"P6", 3)


def save_ppm(img: np.ndarray) -> bytes:
    """Canonical P6 encoding, deterministic byte for byte."""
    img = ensure_u8(img)
    h, w = img.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()


def load_pgm(data: bytes) -> np.ndarray:
    """Decode a binary P5 PGM (maxval 255) to a (H, W) uint8 array."""
    return _parse_netpbm(data, b"P5", 1)


def save_pgm(gray: np.ndarray) -> bytes:
    gray = np.asarray(gray)
    if gray.dtype != np.uint8 or gray.ndim != 2:
        raise ValueError(f"expected (H, W) uint8 array, got {gray.dtype} {gray.shape}")
    h, w = gray.shape
    return b"P5\n%d %d\n255\n" % (w, h) + gray.tobytes()


# ---------------------------------------------------------------------------
# normalization and resampling
# ---------------------------------------------------------------------------

def normalize_image(img: np.ndarray) -> np.ndarray:
    """Per-channel standardization (x - mean) / (population std + 1e-8)."""
    img = ensure_u8(img)
    pixels = img.reshape(-1, 3).astype(np.float64)
    mean = pixels.mean(axis=0)
    std = pixels.std(axis=0)  # population std
    out = (img.astype(np.float64) - mean) / (std + NORM_EPS)
    return out.astype(np.float32)


def bilinear_sample_grid(
    img: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: np.ndarray
) -> np.ndarray:
    """Bilinear interpolation of the four neighbors at each (x, y).

    Neighbors outside [0, w-1] x [0, h-1] contribute ``fill``, so fully
    outside coordinates return the fill value and partial overlap blends
    with it. Returns float64 values of shape ``xs.shape + (3,)``.
    """
    h, w = img.shape[:2]
    data = img.astype(np.float64, copy=False)
    fill = np.asarray(fill, dtype=np.float64).reshape(1, 3)

    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    shape = xs.shape
    xs = xs.ravel()
    ys = ys.ravel()

    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    out = np.zeros((xs.size, 3), dtype=np.float64)
    for dx, dy, weight in (
        (0, 0, (1 - fx) * (1 - fy)),
        (1, 0, fx * (1 - fy)),
        (0, 1, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi = x0 + dx
        yi = y0 + dy
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        values = np.where(
            inside[:, None],
            data[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)],
            fill,
        )
        out += weight[:, None] * values
    return out.reshape(shape + (3,))


def bilinear_sample(img: np.ndarray, x: float, y: float, fill) -> np.ndarray:
    """Single-point bilinear sample; see :func:`bilinear_sample_grid`."""
    return bilinear_sample_grid(
        img, np.array([x]), np.array([y]), np.asarray(fill)
    )[0]


def bilinear_resize(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resize a byte image with corner-aligned bilinear resampling.

    A size-preserving call is the exact identity. Single-row or
    single-column outputs sample the source center along that axis.
    """
    img = ensure_u8(img)
    h, w = img.shape[:2]
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    if out_w > 1:
        xs = np.arange(out_w, dtype=np.float64) * ((w - 1) / (out_w - 1))
    else:
        xs = np.full(1, (w - 1) / 2.0)
    if out_h > 1:
        ys = np.arange(out_h, dtype=np.float64) * ((h - 1) / (out_h - 1))
    else:
        ys = np.full(1, (h - 1) / 2.0)
    grid_x, grid_y = np.meshgrid(xs, ys)
    sampled = bilinear_sample_grid(img, grid_x, grid_y, np.zeros(3))
    return u8_from_float(sampled)


def flip_x(img: np.ndarray) -> np.ndarray:
    """Mirror about the vertical axis (reverses columns); involution."""
    return np.flip(img, axis=1).copy()


def flip_y(img: np.ndarray) -> np.ndarray:
    """Mirror about the horizontal axis (reverses rows); involution."""
    return np.flip(img, axis=0).copy()
