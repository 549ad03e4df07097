"""Dense grid types and bilinear upsampling.

Conventions used throughout the package:

* feature maps are ``(C, H, W)`` float arrays,
* binary masks are ``(H, W)`` bool arrays,
* RGB images are ``(H, W, 3)`` uint8 arrays,
* label maps and displacement fields get small wrapper classes because they
  carry metadata (class count / ignore index) or two named components.

Interpolation uses the align-corners=false convention: destination index
``i`` samples source coordinate ``(i + 0.5) * in / out - 0.5`` clamped to
``[0, in - 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

DEFAULT_IGNORE_INDEX = 255


@dataclass(frozen=True, eq=False)
class LabelMap:
    """H x W grid of class indices with a reserved ignore value."""

    data: np.ndarray
    num_classes: int
    ignore_index: int = DEFAULT_IGNORE_INDEX

    def __post_init__(self):
        data = np.array(self.data, dtype=np.int64, copy=True)
        if data.ndim != 2:
            raise ShapeError(f"label map must be 2-D, got shape {data.shape}")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        bad = (data != self.ignore_index) & ((data < 0) | (data >= self.num_classes))
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise ValueError(
                f"label {data[r, c]} at ({r}, {c}) is neither < num_classes="
                f"{self.num_classes} nor the ignore index {self.ignore_index}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return self.data != self.ignore_index

    def with_data(self, data) -> "LabelMap":
        return LabelMap(data, self.num_classes, self.ignore_index)

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and self.ignore_index == other.ignore_index
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Per-pixel offsets in pixels; +x points right, +y points down."""

    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        dx = np.array(self.dx, dtype=np.float64, copy=True)
        dy = np.array(self.dy, dtype=np.float64, copy=True)
        if dx.ndim != 2 or dx.shape != dy.shape:
            raise ShapeError(f"dx {dx.shape} and dy {dy.shape} must be equal 2-D shapes")
        if not (np.isfinite(dx).all() and np.isfinite(dy).all()):
            raise ValueError("displacement field contains non-finite values")
        dx.setflags(write=False)
        dy.setflags(write=False)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dy", dy)

    @classmethod
    def zeros(cls, height, width):
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    @classmethod
    def from_array(cls, arr) -> "DisplacementField":
        arr = np.asarray(arr)
        if arr.ndim != 3 or arr.shape[0] != 2:
            raise ShapeError(f"displacement tensor must be 2 x H x W, got {arr.shape}")
        return cls(arr[0], arr[1])

    def to_array(self) -> np.ndarray:
        return np.stack([self.dx, self.dy])

    @property
    def shape(self):
        return self.dx.shape

    def __eq__(self, other):
        if not isinstance(other, DisplacementField):
            return NotImplemented
        return np.array_equal(self.dx, other.dx) and np.array_equal(self.dy, other.dy)


def as_feature_map(arr) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ShapeError(f"feature map must be C x H x W, got shape {arr.shape}")
    if 0 in arr.shape:
        raise ShapeError(f"feature map has a zero-sized dimension: {arr.shape}")
    return arr


def _axis_coords(n_in, n_out):
    """Lower index, upper index and fractional weight along one axis."""
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def bilinear_upsample(src, out_height, out_width) -> np.ndarray:
    """Bilinearly resize a ``(C, H, W)`` map to ``(C, out_height, out_width)``.

    Computed as two separable lerps ``a + t * (b - a)`` in float64, which keeps
    constant inputs exactly constant and the same-size case an exact copy.
    """
    src = as_feature_map(src)
    c, h, w = src.shape
    if out_height < 1 or out_width < 1:
        raise ShapeError(f"destination size must be positive, got {out_height}x{out_width}")
    if out_height < h or out_width < w:
        raise ShapeError(
            f"cannot upsample {h}x{w} to the smaller size {out_height}x{out_width}"
        )
    x = src.astype(np.float64)
    y0, y1, ty = _axis_coords(h, out_height)
    top, bottom = x[:, y0, :], x[:, y1, :]
    rows = top + ty[None, :, None] * (bottom - top)
    x0, x1, tx = _axis_coords(w, out_width)
    left, right = rows[:, :, x0], rows[:, :, x1]
    return left + tx[None, None, :] * (right - left)
