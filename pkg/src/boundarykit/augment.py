"""Class-wise erosion copy-paste augmentation.

A random subset of "thing" classes is taken from a pseudo-labelled image,
each class mask is eroded with a square structuring element so that the
unreliable object borders are dropped, and the surviving pixels (image and
label) are pasted at the same coordinates onto a destination pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .grid import LabelMap

# Cityscapes train ids: pole, traffic light, traffic sign, person, rider,
# car, truck, bus, train, motorcycle, bicycle
CITYSCAPES_THINGS = (5, 6, 7, 11, 12, 13, 14, 15, 16, 17, 18)


@dataclass(frozen=True)
class AugmentConfig:
    """Parameters of the paste-mask sampler.

    ``subset_size=None`` draws every present pasteable class independently
    with probability ``keep_prob`` and forces one uniformly chosen class if
    none was drawn. An integer draws exactly that many present classes (or
    all of them, if fewer are present); 0 disables pasting.
    """

    pasteable_classes: tuple = CITYSCAPES_THINGS
    subset_size: int | None = None
    erode_side: int = 5
    seed: int = 0
    min_surviving_pixels: int = 1
    keep_prob: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "pasteable_classes", tuple(sorted(set(int(c) for c in self.pasteable_classes))))
        if not self.pasteable_classes:
            raise ConfigError("pasteable_classes must not be empty")
        check_side(self.erode_side)
        if self.subset_size is not None and self.subset_size < 0:
            raise ConfigError("subset_size must be >= 0")
        if self.min_surviving_pixels < 0:
            raise ConfigError("min_surviving_pixels must be >= 0")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ConfigError("keep_prob must be in (0, 1]")


@dataclass
class PasteReport:
    chosen: list = field(default_factory=list)
    pixel_counts: dict = field(default_factory=dict)
    sampled: list = field(default_factory=list)

    @property
    def pasted_pixels(self):
        return sum(self.pixel_counts.values())

    def to_dict(self):
        return {
            "chosen_classes": list(self.chosen),
            "sampled_classes": list(self.sampled),
            "pixel_counts": {str(c): n for c, n in self.pixel_counts.items()},
            "pasted_pixels": self.pasted_pixels,
        }


def check_side(side):
    if int(side) != side or side < 1 or side % 2 == 0:
        raise ConfigError(f"structuring element side must be a positive odd integer, got {side}")


def class_mask(labels: LabelMap, c: int) -> np.ndarray:
    if not 0 <= c < labels.num_classes:
        raise ConfigError(f"class {c} outside 0..{labels.num_classes - 1}")
    return labels.data == c


def erode(mask, side: int = 5) -> np.ndarray:
    """Binary erosion by a ``side x side`` square; outside the image is background.

    Uses a summed-area table: a pixel survives when its window holds exactly
    ``side**2`` foreground pixels.
    """
    check_side(side)
    mask = np.asarray(mask, dtype=bool)
    if side == 1:
        return mask.copy()
    r = side // 2
    h, w = mask.shape
    out = np.zeros((h, w), dtype=bool)
    if h < side or w < side:
        return out
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    sat[1:, 1:] = mask.cumsum(0).cumsum(1)
    win = sat[side:, side:] - sat[:-side, side:] - sat[side:, :-side] + sat[:-side, :-side]
    out[r:h - r, r:w - r] = win == side * side
    return out


def sample_classes(present, cfg: AugmentConfig, rng: np.random.Generator) -> list:
    present = sorted(present)
    if not present:
        return []
    if cfg.subset_size is not None:
        k = min(cfg.subset_size, len(present))
        return sorted(int(c) for c in rng.choice(present, size=k, replace=False))
    keep = rng.random(len(present)) < cfg.keep_prob
    if not keep.any():
        keep[rng.integers(len(present))] = True
    return [c for c, k in zip(present, keep) if k]


def build_paste_mask(pseudo: LabelMap, cfg: AugmentConfig, rng: np.random.Generator):
    """Union of eroded masks of a random subset of pasteable classes.

    Returns ``(mask, report)``; classes whose eroded mask keeps fewer than
    ``cfg.min_surviving_pixels`` pixels are left out of ``report.chosen``.
    """
    present = set(np.unique(pseudo.data).tolist()) & set(cfg.pasteable_classes)
    report = PasteReport(sampled=sample_classes(present, cfg, rng))
    mask = np.zeros(pseudo.shape, dtype=bool)
    for c in report.sampled:
        eroded = erode(class_mask(pseudo, c), cfg.erode_side)
        n = int(eroded.sum())
        if n < max(cfg.min_surviving_pixels, 1):
            continue
        report.chosen.append(c)
        report.pixel_counts[c] = n
        mask |= eroded
    return mask, report


def paste(dst_img, dst_labels: LabelMap, src_img, src_pseudo: LabelMap, mask):
    """Take image and label from the source where ``mask`` is set, else from the destination."""
    dst_img = np.asarray(dst_img)
    src_img = np.asarray(src_img)
    mask = np.asarray(mask, dtype=bool)
    shapes = {dst_img.shape[:2], src_img.shape[:2], dst_labels.shape, src_pseudo.shape, mask.shape}
    if len(shapes) != 1:
        raise ShapeError(f"paste inputs disagree in size: {sorted(shapes)}")
    if dst_img.shape != src_img.shape:
        raise ShapeError(f"image shapes differ: {dst_img.shape} vs {src_img.shape}")
    img = np.where(mask[..., None], src_img, dst_img)
    labels = np.where(mask, src_pseudo.data, dst_labels.data)
    num_classes = max(dst_labels.num_classes, src_pseudo.num_classes)
    return img, LabelMap(labels, num_classes, dst_labels.ignore_index)


def synthesize_pair(target_img, target_pseudo: LabelMap, dest_img, dest_labels: LabelMap,
                    cfg: AugmentConfig | None = None, rng=None):
    """Paste eroded target objects onto a destination pair.

    The destination can be a labelled source-domain pair or another target
    image with its pseudo-label. ``rng`` defaults to a generator seeded with
    ``cfg.seed``.
    """
    cfg = cfg or AugmentConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if target_pseudo.ignore_index != dest_labels.ignore_index:
        raise ConfigError("target and destination label maps use different ignore indices")
    mask, report = build_paste_mask(target_pseudo, cfg, rng)
    img, labels = paste(dest_img, dest_labels, target_img, target_pseudo, mask)
    return img, labels, report
