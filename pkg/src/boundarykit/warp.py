"""Backward bilinear warping of feature maps by a displacement field.

Each output pixel ``p`` gathers from ``p + D(p)`` with the bilinear kernel
over the four integer neighbours of that point. Displacements are in pixels
at the resolution of the warped map. :func:`warp_backward` gives the exact
gradients of ``<warp(A, D), U>`` with respect to ``A`` and ``D``; at integer
sample coordinates the floor-based (right-sided) cell is used.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .grid import DisplacementField, as_feature_map, bilinear_upsample

BORDER_MODES = ("clamp", "zeros")


@dataclass(frozen=True)
class WarpConfig:
    border_mode: str = "clamp"

    def __post_init__(self):
        if self.border_mode not in BORDER_MODES:
            raise ConfigError(f"border_mode must be one of {BORDER_MODES}, got {self.border_mode!r}")


@dataclass(frozen=True)
class WarpGradients:
    d_features: np.ndarray
    d_disp: DisplacementField


@dataclass
class _Sampling:
    y0: np.ndarray
    x0: np.ndarray
    y1: np.ndarray
    x1: np.ndarray
    ty: np.ndarray
    tx: np.ndarray
    # per-neighbour validity (all True in clamp mode)
    ok00: np.ndarray
    ok01: np.ndarray
    ok10: np.ndarray
    ok11: np.ndarray
    # coordinate was clamped, so the derivative along that axis is zero
    clamped_x: np.ndarray
    clamped_y: np.ndarray


def _sampling(disp: DisplacementField, h, w, border_mode) -> _Sampling:
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    x = cols + disp.dx
    y = rows + disp.dy
    if border_mode == "clamp":
        clamped_x = (x < 0) | (x > w - 1)
        clamped_y = (y < 0) | (y > h - 1)
        x = np.clip(x, 0, w - 1)
        y = np.clip(y, 0, h - 1)
    else:
        clamped_x = clamped_y = np.zeros((h, w), dtype=bool)
    fx = np.floor(x)
    fy = np.floor(y)
    tx = x - fx
    ty = y - fy
    x0 = fx.astype(np.intp)
    y0 = fy.astype(np.intp)
    x1 = x0 + 1
    y1 = y0 + 1
    in_x0 = (x0 >= 0) & (x0 < w)
    in_x1 = (x1 >= 0) & (x1 < w)
    in_y0 = (y0 >= 0) & (y0 < h)
    in_y1 = (y1 >= 0) & (y1 < h)
    if border_mode == "clamp":
        # x0 is always inside; x1 only leaves the grid when tx == 0
        ok = np.ones((h, w), dtype=bool)
        ok00 = ok01 = ok10 = ok11 = ok
    else:
        ok00, ok01 = in_y0 & in_x0, in_y0 & in_x1
        ok10, ok11 = in_y1 & in_x0, in_y1 & in_x1
    return _Sampling(
        np.clip(y0, 0, h - 1), np.clip(x0, 0, w - 1),
        np.clip(y1, 0, h - 1), np.clip(x1, 0, w - 1),
        ty, tx, ok00, ok01, ok10, ok11, clamped_x, clamped_y,
    )


def _check(features, disp):
    features = as_feature_map(features)
    if tuple(disp.shape) != tuple(features.shape[1:]):
        raise ShapeError(
            f"displacement field {disp.shape} does not match feature grid {features.shape[1:]}"
        )
    return features.astype(np.float64)


def _corners(f, s: _Sampling):
    v00 = np.where(s.ok00, f[:, s.y0, s.x0], 0.0)
    v01 = np.where(s.ok01, f[:, s.y0, s.x1], 0.0)
    v10 = np.where(s.ok10, f[:, s.y1, s.x0], 0.0)
    v11 = np.where(s.ok11, f[:, s.y1, s.x1], 0.0)
    return v00, v01, v10, v11


def warp(features, disp: DisplacementField, cfg: WarpConfig | None = None) -> np.ndarray:
    """Gather ``features`` at ``p + disp(p)`` for every pixel ``p``."""
    cfg = cfg or WarpConfig()
    f = _check(features, disp)
    _, h, w = f.shape
    s = _sampling(disp, h, w, cfg.border_mode)
    v00, v01, v10, v11 = _corners(f, s)
    top = v00 + s.tx * (v01 - v00)
    bottom = v10 + s.tx * (v11 - v10)
    return top + s.ty * (bottom - top)


def warp_backward(features, disp: DisplacementField, upstream, cfg: WarpConfig | None = None) -> WarpGradients:
    cfg = cfg or WarpConfig()
    f = _check(features, disp)
    c, h, w = f.shape
    u = np.asarray(upstream, dtype=np.float64)
    if u.ndim == 2:
        u = u[None]
    if u.shape != f.shape:
        raise ShapeError(f"upstream gradient {u.shape} does not match warp output {f.shape}")
    s = _sampling(disp, h, w, cfg.border_mode)

    d_features = np.zeros(c * h * w, dtype=np.float64)
    chan = (np.arange(c) * h * w)[:, None, None]
    for yi, xi, ok, wgt in (
        (s.y0, s.x0, s.ok00, (1 - s.tx) * (1 - s.ty)),
        (s.y0, s.x1, s.ok01, s.tx * (1 - s.ty)),
        (s.y1, s.x0, s.ok10, (1 - s.tx) * s.ty),
        (s.y1, s.x1, s.ok11, s.tx * s.ty),
    ):
        contrib = u * np.where(ok, wgt, 0.0)
        idx = chan + (yi * w + xi)[None]
        d_features += np.bincount(idx.ravel(), weights=contrib.ravel(), minlength=c * h * w)

    v00, v01, v10, v11 = _corners(f, s)
    ddx = (1 - s.ty) * (v01 - v00) + s.ty * (v11 - v10)
    ddy = (1 - s.tx) * (v10 - v00) + s.tx * (v11 - v01)
    g_dx = np.where(s.clamped_x, 0.0, (u * ddx).sum(axis=0))
    g_dy = np.where(s.clamped_y, 0.0, (u * ddy).sum(axis=0))
    return WarpGradients(d_features.reshape(c, h, w), DisplacementField(g_dx, g_dy))


def refine(coarse, disp: DisplacementField, cfg: WarpConfig | None = None) -> np.ndarray:
    """Upsample ``coarse`` to the displacement grid, then warp it."""
    h, w = disp.shape
    return warp(bilinear_upsample(coarse, h, w), disp, cfg)
