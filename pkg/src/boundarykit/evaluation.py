"""Confusion-matrix metrics and trimap (boundary band) evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import METRICS, distance_to
from .edges import neighbor_difference_edges
from .errors import ConfigError, EvaluationError, ShapeError
from .grid import LabelMap

DEFAULT_BANDS = (4, 8, 16, 20)
BAND_CONVENTIONS = ("full", "half")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """``counts[g, p]`` = number of pixels with ground truth ``g`` predicted as ``p``."""

    counts: np.ndarray

    @classmethod
    def empty(cls, num_classes):
        return cls(np.zeros((num_classes, num_classes), dtype=np.int64))

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ShapeError(f"confusion matrix must be square, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def num_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    def __add__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        if other.num_classes != self.num_classes:
            raise ShapeError("cannot add confusion matrices of different sizes")
        return ConfusionMatrix(self.counts + other.counts)

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)


@dataclass(frozen=True)
class TrimapSpec:
    """Band radii in pixels around ground-truth class boundaries.

    A pixel belongs to the band of radius ``r`` when its distance to the
    nearest boundary pixel is below ``r`` (``full``), or below ``r / 2``
    (``half``, total band width ``r``). Boundary pixels are the
    neighbour-difference edges of the ground truth, which lie on both sides
    of a class transition, so ``full`` with radius ``r`` spans ``r`` pixels
    on each side.
    """

    bandwidths: tuple = DEFAULT_BANDS
    metric: str = "euclidean"
    convention: str = "full"

    def __post_init__(self):
        bands = tuple(self.bandwidths)
        object.__setattr__(self, "bandwidths", bands)
        if not bands:
            raise ConfigError("at least one bandwidth is required")
        if any(b <= 0 for b in bands):
            raise ConfigError("bandwidths must be strictly positive")
        if list(bands) != sorted(set(bands)):
            raise ConfigError("bandwidths must be sorted ascending without repeats")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.convention not in BAND_CONVENTIONS:
            raise ConfigError(f"convention must be one of {BAND_CONVENTIONS}, got {self.convention!r}")


def accumulate(cm: ConfusionMatrix, pred: LabelMap, gt: LabelMap, region=None) -> ConfusionMatrix:
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    n = cm.num_classes
    if gt.num_classes > n or pred.num_classes > n:
        raise ShapeError(f"label maps have more classes than the {n}-class matrix")
    keep = gt.valid
    if region is not None:
        region = np.asarray(region, dtype=bool)
        if region.shape != gt.shape:
            raise ShapeError(f"region {region.shape} does not match label grid {gt.shape}")
        keep = keep & region
    g = gt.data[keep]
    p = pred.data[keep]
    if (p == pred.ignore_index).any():
        raise EvaluationError("prediction holds the ignore index at evaluated pixels")
    counts = np.bincount(g * n + p, minlength=n * n).reshape(n, n)
    return ConfusionMatrix(cm.counts + counts)


def iou_per_class(cm: ConfusionMatrix) -> np.ndarray:
    """IoU per class with ``nan`` for classes absent from both rows and columns."""
    c = cm.counts.astype(np.float64)
    tp = np.diag(c)
    union = c.sum(axis=1) + c.sum(axis=0) - tp
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(union > 0, tp / np.where(union > 0, union, 1), np.nan)


def miou(cm: ConfusionMatrix, class_subset=None):
    """Return ``(per_class, mean)``; ``per_class`` holds ``nan`` for absent classes."""
    per_class = iou_per_class(cm)
    classes = range(cm.num_classes) if class_subset is None else sorted(set(class_subset))
    vals = []
    for k in classes:
        if not 0 <= k < cm.num_classes:
            raise EvaluationError(f"class {k} outside the {cm.num_classes}-class matrix")
        if not np.isnan(per_class[k]):
            vals.append(per_class[k])
    if not vals:
        raise EvaluationError("no class has support; mIoU is undefined")
    return per_class.tolist(), float(np.mean(vals))


def boundary_distance(gt: LabelMap, metric="euclidean") -> np.ndarray:
    return distance_to(neighbor_difference_edges(gt), metric)


def trimap_band(gt: LabelMap, radius, metric="euclidean", convention="full") -> np.ndarray:
    if radius < 1:
        raise ConfigError(f"trimap radius must be >= 1, got {radius}")
    limit = radius if convention == "full" else radius / 2
    return boundary_distance(gt, metric) < limit


@dataclass
class TrimapResult:
    bands: dict
    matrices: dict
    global_cm: ConfusionMatrix

    def to_dict(self, class_subset=None):
        out = {"bands": {}}
        for b, mean in self.bands.items():
            cm = self.matrices[b]
            per_class, _ = miou(cm, class_subset)
            out["bands"][str(b)] = {
                "miou": mean,
                "per_class_iou": [None if np.isnan(v) else v for v in per_class],
                "pixels": cm.total,
            }
        return out


def trimap_miou(preds, gts, spec: TrimapSpec | None = None, num_classes=None, class_subset=None) -> TrimapResult:
    """mIoU restricted to ground-truth boundary bands, one entry per bandwidth.

    Raises :class:`EvaluationError` when a band contains no valid pixel.
    """
    spec = spec or TrimapSpec()
    preds, gts = list(preds), list(gts)
    if len(preds) != len(gts):
        raise ShapeError(f"{len(preds)} predictions for {len(gts)} ground-truth maps")
    if not gts:
        raise EvaluationError("no images to evaluate")
    n = num_classes or max(g.num_classes for g in gts)
    matrices = {b: ConfusionMatrix.empty(n) for b in spec.bandwidths}
    global_cm = ConfusionMatrix.empty(n)
    for pred, gt in zip(preds, gts):
        global_cm = accumulate(global_cm, pred, gt)
        dist = boundary_distance(gt, spec.metric)
        for b in spec.bandwidths:
            limit = b if spec.convention == "full" else b / 2
            matrices[b] = accumulate(matrices[b], pred, gt, dist < limit)
    bands = {}
    for b in spec.bandwidths:
        if matrices[b].total == 0:
            raise EvaluationError(f"trimap band {b} contains no valid pixels")
        bands[b] = miou(matrices[b], class_subset)[1]
    return TrimapResult(bands, matrices, global_cm)
