"""PNG-ready renderings: displacement colour coding, label colouring, edge overlays."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .grid import DisplacementField, LabelMap

# (colour at segment start, number of wheel steps to the next entry).
# "hsv": six equal 60-degree segments, so wheel position equals HSV hue.
# "middlebury": the optical-flow benchmark wheel with perceptual spacing.
WHEELS = {
    "hsv": [((1, 0, 0), 1), ((1, 1, 0), 1), ((0, 1, 0), 1),
            ((0, 1, 1), 1), ((0, 0, 1), 1), ((1, 0, 1), 1)],
    "middlebury": [((1, 0, 0), 15), ((1, 1, 0), 6), ((0, 1, 0), 4),
                   ((0, 1, 1), 11), ((0, 0, 1), 13), ((1, 0, 1), 6)],
}

CITYSCAPES_PALETTE = {
    0: (128, 64, 128), 1: (244, 35, 232), 2: (70, 70, 70), 3: (102, 102, 156),
    4: (190, 153, 153), 5: (153, 153, 153), 6: (250, 170, 30), 7: (220, 220, 0),
    8: (107, 142, 35), 9: (152, 251, 152), 10: (70, 130, 180), 11: (220, 20, 60),
    12: (255, 0, 0), 13: (0, 0, 142), 14: (0, 0, 70), 15: (0, 60, 100),
    16: (0, 80, 100), 17: (0, 0, 230), 18: (119, 11, 32),
}


@dataclass(frozen=True)
class FlowColorSpec:
    """``max_magnitude=None`` uses the 99th percentile of the displacement norm."""

    max_magnitude: float | None = None
    wheel: str = "hsv"

    def __post_init__(self):
        if self.max_magnitude is not None and not self.max_magnitude > 0:
            raise ConfigError("max_magnitude must be > 0")
        if self.wheel not in WHEELS:
            raise ConfigError(f"wheel must be one of {sorted(WHEELS)}, got {self.wheel!r}")


def color_wheel(name="hsv") -> np.ndarray:
    """Expand a segment table into an ``(N, 3)`` array of wheel colours in [0, 1]."""
    table = WHEELS[name]
    cols = []
    for i, (start, steps) in enumerate(table):
        end = np.array(table[(i + 1) % len(table)][0], dtype=np.float64)
        start = np.array(start, dtype=np.float64)
        t = np.arange(steps, dtype=np.float64)[:, None] / steps
        cols.append(start + t * (end - start))
    return np.concatenate(cols)


def flow_angle(dx, dy):
    """Direction in radians, counter-clockwise from +x as seen on screen (y points down)."""
    return np.arctan2(-np.asarray(dy), np.asarray(dx))


def flow_to_rgb(disp: DisplacementField, spec: FlowColorSpec | None = None) -> np.ndarray:
    """Hue encodes direction, saturation encodes magnitude; zero displacement is white."""
    spec = spec or FlowColorSpec()
    mag = np.hypot(disp.dx, disp.dy)
    max_mag = spec.max_magnitude
    if max_mag is None:
        max_mag = float(np.percentile(mag, 99)) if mag.size else 0.0
        if max_mag <= 0:
            max_mag = 1.0
    wheel = color_wheel(spec.wheel)
    n = len(wheel)
    pos = np.mod(flow_angle(disp.dx, disp.dy) / (2 * np.pi), 1.0) * n
    k0 = np.floor(pos).astype(np.intp) % n
    k1 = (k0 + 1) % n
    t = (pos - np.floor(pos))[..., None]
    col = wheel[k0] + t * (wheel[k1] - wheel[k0])
    sat = np.clip(mag / max_mag, 0.0, 1.0)[..., None]
    col = 1.0 - sat * (1.0 - col)
    return np.floor(col * 255.0 + 0.5).astype(np.uint8)


def parse_palette(obj) -> dict:
    """Palette from JSON: a list of RGB triples or a mapping of class -> triple."""
    items = enumerate(obj) if isinstance(obj, list) else obj.items()
    out = {}
    for k, rgb in items:
        try:
            key = int(k)
        except (TypeError, ValueError):
            raise ConfigError(f"palette key {k!r} is not a class index") from None
        if not (isinstance(rgb, (list, tuple)) and len(rgb) == 3
                and all(isinstance(v, int) and 0 <= v <= 255 for v in rgb)):
            raise ConfigError(f"palette entry for class {key} must be three integers in 0..255")
        out[key] = tuple(rgb)
    return out


def colorize_labels(labels: LabelMap, palette=None) -> np.ndarray:
    """Recolour class indices; ignore pixels become black unless the palette lists them."""
    palette = CITYSCAPES_PALETTE if palette is None else palette
    palette = dict(palette)
    palette.setdefault(labels.ignore_index, (0, 0, 0))
    present = np.unique(labels.data)
    missing = [int(c) for c in present if int(c) not in palette]
    if missing:
        raise ConfigError(f"palette has no colour for classes {missing}")
    lut = np.zeros((int(present.max()) + 1, 3), dtype=np.uint8)
    for c in present:
        lut[c] = palette[int(c)]
    return lut[labels.data]


def overlay_edges(img, edges, color=(255, 255, 255)) -> np.ndarray:
    img = np.asarray(img, dtype=np.uint8)
    edges = np.asarray(edges, dtype=bool)
    if img.shape[:2] != edges.shape:
        raise ShapeError(f"edge mask {edges.shape} does not match image {img.shape[:2]}")
    out = img.copy()
    out[edges] = color
    return out
