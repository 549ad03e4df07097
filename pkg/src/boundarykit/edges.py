"""Semantic-edge ground truth from label maps.

Two detectors are available. ``neighbor`` marks a pixel when one of its
4-neighbours carries a different (non-ignore) class; it is exact on discrete
maps and is the default. ``canny`` runs the classic Canny pipeline on each
class indicator image separately and unions the results, so only semantic
boundaries can respond and the output does not depend on class numbering.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .grid import LabelMap

METHODS = ("neighbor", "canny")


@dataclass(frozen=True)
class EdgeExtractionConfig:
    method: str = "neighbor"
    canny_sigma: float = 1.0
    canny_low: float = 0.1
    canny_high: float = 0.2

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"edge method must be one of {METHODS}, got {self.method!r}")
        if not self.canny_sigma > 0:
            raise ConfigError("canny_sigma must be > 0")
        if not self.canny_low < self.canny_high:
            raise ConfigError("canny_low must be < canny_high")


def neighbor_difference_edges(labels: LabelMap) -> np.ndarray:
    d = labels.data
    valid = labels.valid
    edges = np.zeros(d.shape, dtype=bool)
    horiz = (d[:, 1:] != d[:, :-1]) & valid[:, 1:] & valid[:, :-1]
    edges[:, 1:] |= horiz
    edges[:, :-1] |= horiz
    vert = (d[1:, :] != d[:-1, :]) & valid[1:, :] & valid[:-1, :]
    edges[1:, :] |= vert
    edges[:-1, :] |= vert
    return edges


def _fill_ignore(labels: LabelMap) -> np.ndarray:
    """Replace ignore pixels with the label of the nearest valid pixel."""
    valid = labels.valid
    if valid.all():
        return labels.data
    _, (ri, ci) = ndimage.distance_transform_edt(~valid, return_indices=True)
    return labels.data[ri, ci]


def non_maximum_suppression(mag, gx, gy):
    angle = np.arctan2(gy, gx)
    q = np.rint(angle / (np.pi / 4)) * (np.pi / 4)
    dr = np.rint(np.sin(q)).astype(np.intp)
    dc = np.rint(np.cos(q)).astype(np.intp)
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="edge")
    rr, cc = np.mgrid[0:h, 0:w]
    fwd = padded[rr + 1 + dr, cc + 1 + dc]
    back = padded[rr + 1 - dr, cc + 1 - dc]
    return (mag > 0) & (mag >= fwd) & (mag >= back)


def hysteresis(mag, candidates, low, high):
    weak = candidates & (mag >= low)
    strong = candidates & (mag >= high)
    comp, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return np.zeros_like(weak)
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(comp[strong])] = True
    keep[0] = False
    return keep[comp]


def canny(image, sigma=1.0, low=0.1, high=0.2) -> np.ndarray:
    """Canny edges of a float image with values on a 0-1 scale.

    Sobel responses are divided by 8 so gradients are in intensity units per
    pixel, which is the scale ``low`` and ``high`` refer to.
    """
    img = ndimage.gaussian_filter(np.asarray(image, dtype=np.float64), sigma, mode="nearest")
    gx = ndimage.sobel(img, axis=1, mode="nearest") / 8.0
    gy = ndimage.sobel(img, axis=0, mode="nearest") / 8.0
    mag = np.hypot(gx, gy)
    return hysteresis(mag, non_maximum_suppression(mag, gx, gy), low, high)


def canny_semantic_edges(labels: LabelMap, cfg: EdgeExtractionConfig) -> np.ndarray:
    nd = neighbor_difference_edges(labels)
    if not nd.any():
        return nd
    filled = _fill_ignore(labels)
    out = np.zeros(labels.shape, dtype=bool)
    for c in np.unique(filled):
        out |= canny((filled == c).astype(np.float64), cfg.canny_sigma, cfg.canny_low, cfg.canny_high)
    # ignore regions were filled by nearest label; responses there are
    # artifacts of the fill, not ground-truth boundaries
    near_boundary = ndimage.binary_dilation(nd, structure=np.ones((3, 3), dtype=bool))
    return out & near_boundary & labels.valid


def extract_semantic_edges(labels: LabelMap, cfg: EdgeExtractionConfig | None = None) -> np.ndarray:
    cfg = cfg or EdgeExtractionConfig()
    if cfg.method == "neighbor":
        return neighbor_difference_edges(labels)
    return canny_semantic_edges(labels, cfg)


def edge_mask_to_probability(mask) -> np.ndarray:
    """Binary mask as a single-channel ``{0.0, 1.0}`` feature map."""
    return np.asarray(mask, dtype=bool).astype(np.float64)[None]
