"""Boundary-focused tools for semantic segmentation adaptation experiments."""
from .augment import AugmentConfig, build_paste_mask, class_mask, erode, paste, synthesize_pair
from .distance import distance_to
from .edges import EdgeExtractionConfig, edge_mask_to_probability, extract_semantic_edges
from .errors import (
    BoundaryKitError,
    ConfigError,
    DomainError,
    EvaluationError,
    FormatError,
    ShapeError,
)
from .evaluation import ConfusionMatrix, TrimapSpec, accumulate, miou, trimap_band, trimap_miou
from .grid import DisplacementField, LabelMap, bilinear_upsample
from .losses import LossConfig, LossValue, combined_loss, edge_bce, seg_cross_entropy
from .viz import FlowColorSpec, colorize_labels, flow_to_rgb, overlay_edges
from .warp import WarpConfig, WarpGradients, refine, warp, warp_backward

__version__ = "0.1.0"
