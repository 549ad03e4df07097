"""Loss evaluators for edge and segmentation predictions given as probabilities."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, ShapeError
from .grid import LabelMap, as_feature_map

REDUCTIONS = ("mean", "sum")


@dataclass(frozen=True)
class LossConfig:
    lambda_edge: float = 0.1
    reduction: str = "mean"
    probability_floor: float = 1e-7

    def __post_init__(self):
        if not self.lambda_edge >= 0:
            raise ConfigError("lambda_edge must be >= 0")
        if self.reduction not in REDUCTIONS:
            raise ConfigError(f"reduction must be one of {REDUCTIONS}, got {self.reduction!r}")
        if not 0 < self.probability_floor < 0.5:
            raise ConfigError("probability_floor must lie in (0, 0.5)")


@dataclass(frozen=True)
class LossValue:
    """``total`` is ``sum(weights[k] * per_term[k])``.

    ``valid_pixel_count == 0`` marks a loss evaluated on empty support, in
    which case the term is reported as 0.
    """

    total: float
    per_term: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    valid_pixel_count: int = 0

    @property
    def empty(self):
        return self.valid_pixel_count == 0


def _reduce(values, cfg):
    if cfg.reduction == "sum":
        return float(values.sum())
    return float(values.mean()) if values.size else 0.0


def edge_bce(pred, target, cfg: LossConfig | None = None) -> LossValue:
    """Binary cross-entropy between an edge probability map and a binary edge mask."""
    cfg = cfg or LossConfig()
    p = as_feature_map(pred)
    if p.shape[0] != 1:
        raise ShapeError(f"edge prediction must have one channel, got {p.shape[0]}")
    p = p[0].astype(np.float64)
    e = np.asarray(target, dtype=bool)
    if p.shape != e.shape:
        raise ShapeError(f"prediction {p.shape} and target {e.shape} differ")
    if not np.isfinite(p).all() or p.min() < 0 or p.max() > 1:
        raise DomainError("edge probabilities must lie in [0, 1]")
    eps = cfg.probability_floor
    p = np.clip(p, eps, 1 - eps)
    per_pixel = -np.where(e, np.log(p), np.log1p(-p))
    value = _reduce(per_pixel, cfg)
    return LossValue(value, {"edge": value}, {"edge": 1.0}, int(e.size))


def seg_cross_entropy(pred, target: LabelMap, cfg: LossConfig | None = None) -> LossValue:
    """Cross-entropy of per-class probabilities against a label map; ignore pixels are skipped."""
    cfg = cfg or LossConfig()
    p = as_feature_map(pred).astype(np.float64)
    if p.shape[0] != target.num_classes:
        raise ShapeError(f"{p.shape[0]} prediction channels for {target.num_classes} classes")
    if p.shape[1:] != target.shape:
        raise ShapeError(f"prediction grid {p.shape[1:]} and target {target.shape} differ")
    if not np.isfinite(p).all() or p.min() < 0 or p.max() > 1:
        raise DomainError("class probabilities must lie in [0, 1]")
    if np.abs(p.sum(axis=0) - 1).max() > 1e-4:
        raise DomainError("class probabilities must sum to 1 at every pixel (tolerance 1e-4)")
    valid = target.valid
    rows, cols = np.nonzero(valid)
    picked = p[target.data[rows, cols], rows, cols]
    per_pixel = -np.log(np.clip(picked, cfg.probability_floor, 1 - cfg.probability_floor))
    value = _reduce(per_pixel, cfg)
    return LossValue(value, {"seg": value}, {"seg": 1.0}, int(per_pixel.size))


def combined_loss(seg_pred, seg_target: LabelMap, edge_pred, edge_target,
                  cfg: LossConfig | None = None) -> LossValue:
    cfg = cfg or LossConfig()
    seg = seg_cross_entropy(seg_pred, seg_target, cfg)
    edge = edge_bce(edge_pred, edge_target, cfg)
    s, e = seg.per_term["seg"], edge.per_term["edge"]
    return LossValue(
        s + cfg.lambda_edge * e,
        {"seg": s, "edge": e},
        {"seg": 1.0, "edge": cfg.lambda_edge},
        seg.valid_pixel_count,
    )
