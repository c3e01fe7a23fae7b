"""Grayscale rasters (PGM) and the pixel mask that stops the flow on the object."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedImage

BACKGROUND = 255
DEFAULT_SCALE = 0.001


@dataclass(frozen=True, eq=False)
class PixelField:
    """Raster of intensities in [0, 255] placed in world coordinates.

    ``values[row, col]`` with row 0 at the top of the image.  World y grows
    upwards, and the image center sits at ``origin``.
    """

    values: np.ndarray
    scale: float = DEFAULT_SCALE
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError(f"expected a 2-D raster, got shape {vals.shape}")
        if vals.size and (vals.min() < 0 or vals.max() > 255):
            raise ValueError("intensities must lie in [0, 255]")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def world_to_pixel(self, points):
        """Integer ``(row, col)`` arrays of the pixels containing ``points``."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        col = np.floor((pts[:, 0] - self.origin[0]) / self.scale + self.width / 2.0).astype(int)
        row = np.floor(self.height / 2.0 - (pts[:, 1] - self.origin[1]) / self.scale).astype(int)
        return row, col

    def pixel_to_world(self, row, col):
        """World coordinates of pixel centers."""
        row = np.asarray(row, dtype=float)
        col = np.asarray(col, dtype=float)
        x = self.origin[0] + (col + 0.5 - self.width / 2.0) * self.scale
        y = self.origin[1] - (row + 0.5 - self.height / 2.0) * self.scale
        return np.stack([x, y], axis=-1)


def pix_values(field: PixelField, points) -> np.ndarray:
    """Nearest-pixel intensities; points off the raster read as background."""
    row, col = field.world_to_pixel(points)
    inside = (row >= 0) & (row < field.height) & (col >= 0) & (col < field.width)
    out = np.full(len(row), float(BACKGROUND))
    out[inside] = field.values[row[inside], col[inside]]
    return out


def pix(field: PixelField, y) -> float:
    return float(pix_values(field, y)[0])


def mask_factor(field: PixelField, y) -> float:
    return pix(field, y) / 255.0


def mask_values(field, points) -> np.ndarray:
    """Per-point ``Pix / 255``; all ones when ``field`` is None."""
    if field is None:
        return np.ones(len(np.asarray(points).reshape(-1, 2)))
    return pix_values(field, points) / 255.0


def _tokens(data: bytes, start: int, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    i = start
    n = len(data)
    while len(out) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i >= n:
            raise MalformedImage("unexpected end of header", i)
        if data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        out.append((data[i:j], i))
        i = j
    return out, i


def load_pgm(data: bytes, scale: float = DEFAULT_SCALE, origin=(0.0, 0.0)) -> PixelField:
    """Parse a P2 (ASCII) or P5 (binary) graymap with maxval <= 255.

    Intensities are rescaled to the 0..255 range when maxval is smaller.
    """
    if len(data) < 2 or data[:2] not in (b"P2", b"P5"):
        raise MalformedImage("missing P2/P5 magic number", 0)
    magic = data[:2]
    header, pos = _tokens(data, 2, 3)
    nums = []
    for tok, off in header:
        try:
            nums.append(int(tok))
        except ValueError:
            raise MalformedImage(f"bad header field {tok!r}", off) from None
    width, height, maxval = nums
    if width <= 0 or height <= 0:
        raise MalformedImage("non-positive image size", header[0][1])
    if not 0 < maxval <= 255:
        raise MalformedImage(f"maxval {maxval} outside 1..255", header[2][1])

    count = width * height
    if magic == b"P5":
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise MalformedImage("expected whitespace after maxval", pos)
        pos += 1
        payload = data[pos : pos + count]
        if len(payload) < count:
            raise MalformedImage(f"truncated payload: {len(payload)} of {count} bytes", pos + len(payload))
        vals = np.frombuffer(payload, dtype=np.uint8).astype(float)
    else:
        toks, _ = _tokens(data, pos, count) if count else ([], pos)
        vals = np.empty(count)
        for k, (tok, off) in enumerate(toks):
            try:
                vals[k] = int(tok)
            except ValueError:
                raise MalformedImage(f"bad pixel value {tok!r}", off) from None
    if vals.size and vals.max() > maxval:
        raise MalformedImage("pixel value exceeds maxval", pos)
    if maxval != 255:
        vals = vals * (255.0 / maxval)
    return PixelField(vals.reshape(height, width), scale=scale, origin=origin)


def read_pgm(path, scale: float = DEFAULT_SCALE, origin=(0.0, 0.0)) -> PixelField:
    return load_pgm(Path(path).read_bytes(), scale=scale, origin=origin)


def to_pgm_bytes(values) -> bytes:
    vals = np.clip(np.rint(np.asarray(values, dtype=float)), 0, 255).astype(np.uint8)
    h, w = vals.shape
    return b"P5\n%d %d\n255\n" % (w, h) + vals.tobytes()


def disk_field(size: int = 256, radius_px: float = 40.0, scale: float = DEFAULT_SCALE) -> PixelField:
    """White raster with a centered black disk (pixels whose center is within the radius)."""
    idx = np.arange(size) + 0.5 - size / 2.0
    xx, yy = np.meshgrid(idx, idx)
    vals = np.where(xx * xx + yy * yy <= radius_px * radius_px, 0.0, 255.0)
    return PixelField(vals, scale=scale)


def burn_points(field: PixelField, points, value: int = 128) -> np.ndarray:
    """Copy of the raster with the pixels under ``points`` set to ``value``."""
    out = np.array(field.values)
    row, col = field.world_to_pixel(points)
    keep = (row >= 0) & (row < field.height) & (col >= 0) & (col < field.width)
    out[row[keep], col[keep]] = value
    return out
