"""Run configuration: a JSON document whose keys mirror the CLI flags.

Every section is optional and every key has a default::

    {
      "seed": 0, "threads": null, "log_level": "INFO", "output_dir": ".",
      "ignore_index": 255,
      "edges":   {"method": "neighbor", "sigma": 1.0, "low": 0.1, "high": 0.2},
      "warp":    {"border": "clamp"},
      "augment": {"classes": [5, 6, 7, 11, 12, 13, 14, 15, 16, 17, 18],
                  "subset_size": null, "erode_side": 5,
                  "min_surviving_pixels": 1, "keep_prob": 0.5},
      "losses":  {"lambda_edge": 0.1, "reduction": "mean", "probability_floor": 1e-7},
      "eval":    {"num_classes": 19, "subset": null,
                  "bands": [4, 8, 16, 20], "metric": "euclidean", "convention": "full"},
      "viz":     {"max_magnitude": null, "wheel": "hsv"}
    }

Unknown keys and wrongly typed values raise :class:`ConfigError` naming the
offending key.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .augment import CITYSCAPES_THINGS, AugmentConfig
from .edges import EdgeExtractionConfig
from .errors import ConfigError
from .evaluation import DEFAULT_BANDS, TrimapSpec
from .grid import DEFAULT_IGNORE_INDEX
from .losses import LossConfig
from .viz import FlowColorSpec
from .warp import WarpConfig

INT = "int"
NUM = "number"
STR = "str"
INTS = "int-list"
OPT_INT = "int-or-null"
OPT_NUM = "number-or-null"
OPT_INTS = "int-list-or-null"

SCHEMA = {
    "seed": INT,
    "threads": OPT_INT,
    "log_level": STR,
    "output_dir": STR,
    "ignore_index": INT,
    "edges": {"method": STR, "sigma": NUM, "low": NUM, "high": NUM},
    "warp": {"border": STR},
    "augment": {"classes": INTS, "subset_size": OPT_INT, "erode_side": INT,
                "min_surviving_pixels": INT, "keep_prob": NUM},
    "losses": {"lambda_edge": NUM, "reduction": STR, "probability_floor": NUM},
    "eval": {"num_classes": INT, "subset": OPT_INTS,
             "bands": INTS, "metric": STR, "convention": STR},
    "viz": {"max_magnitude": OPT_NUM, "wheel": STR},
}

DEFAULTS = {
    "seed": 0,
    "threads": None,
    "log_level": "INFO",
    "output_dir": ".",
    "ignore_index": DEFAULT_IGNORE_INDEX,
    "edges": {"method": "neighbor", "sigma": 1.0, "low": 0.1, "high": 0.2},
    "warp": {"border": "clamp"},
    "augment": {"classes": list(CITYSCAPES_THINGS), "subset_size": None, "erode_side": 5,
                "min_surviving_pixels": 1, "keep_prob": 0.5},
    "losses": {"lambda_edge": 0.1, "reduction": "mean", "probability_floor": 1e-7},
    "eval": {"num_classes": 19, "subset": None,
             "bands": list(DEFAULT_BANDS), "metric": "euclidean", "convention": "full"},
    "viz": {"max_magnitude": None, "wheel": "hsv"},
}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _type_ok(kind, v):
    if kind.endswith("-or-null"):
        if v is None:
            return True
        kind = kind[: -len("-or-null")]
    if kind == INT:
        return _is_int(v)
    if kind == NUM:
        return _is_num(v)
    if kind == STR:
        return isinstance(v, str)
    if kind == INTS:
        return isinstance(v, list) and all(_is_int(x) for x in v)
    raise AssertionError(kind)


def _validate(doc, schema, prefix=""):
    if not isinstance(doc, dict):
        raise ConfigError(f"{prefix.rstrip('.') or 'config'} must be a JSON object")
    for key, value in doc.items():
        name = prefix + key
        if key not in schema:
            raise ConfigError(f"unknown config key {name!r}")
        kind = schema[key]
        if isinstance(kind, dict):
            _validate(value, kind, name + ".")
        elif not _type_ok(kind, value):
            raise ConfigError(f"config key {name!r} expects {kind}, got {value!r}")


def merge(base, update):
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    seed: int = 0
    threads: int | None = None
    log_level: str = "INFO"
    output_dir: str = "."
    edges: EdgeExtractionConfig = field(default_factory=EdgeExtractionConfig)
    warp: WarpConfig = field(default_factory=WarpConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    losses: LossConfig = field(default_factory=LossConfig)
    trimap: TrimapSpec = field(default_factory=TrimapSpec)
    num_classes: int = 19
    ignore_index: int = DEFAULT_IGNORE_INDEX
    class_subset: tuple | None = None
    viz: FlowColorSpec = field(default_factory=FlowColorSpec)
    raw: dict = field(default_factory=dict, repr=False)


def _build(section, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def build_config(doc=None, overrides=None) -> RunConfig:
    """Validate ``doc`` and ``overrides`` (same schema; overrides win) into a RunConfig."""
    doc = {} if doc is None else doc
    overrides = overrides or {}
    _validate(doc, SCHEMA)
    _validate(overrides, SCHEMA)
    d = merge(merge(DEFAULTS, doc), overrides)

    if d["threads"] is not None and d["threads"] < 1:
        raise ConfigError("config key 'threads' must be >= 1")
    if d["log_level"].upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"config key 'log_level' has unknown level {d['log_level']!r}")
    e, a, lo, ev, v = d["edges"], d["augment"], d["losses"], d["eval"], d["viz"]
    if not 0 <= d["ignore_index"] <= 255:
        raise ConfigError("config key 'ignore_index' must lie in 0..255")
    if a["erode_side"] < 1 or a["erode_side"] % 2 == 0:
        raise ConfigError(f"config key 'augment.erode_side' must be a positive odd integer, got {a['erode_side']}")
    if ev["num_classes"] < 1:
        raise ConfigError("config key 'eval.num_classes' must be >= 1")
    return RunConfig(
        seed=d["seed"],
        threads=d["threads"],
        log_level=d["log_level"].upper(),
        output_dir=d["output_dir"],
        edges=_build("edges", EdgeExtractionConfig, method=e["method"],
                     canny_sigma=e["sigma"], canny_low=e["low"], canny_high=e["high"]),
        warp=_build("warp", WarpConfig, border_mode=d["warp"]["border"]),
        augment=_build("augment", AugmentConfig, pasteable_classes=tuple(a["classes"]),
                       subset_size=a["subset_size"], erode_side=a["erode_side"], seed=d["seed"],
                       min_surviving_pixels=a["min_surviving_pixels"], keep_prob=a["keep_prob"]),
        losses=_build("losses", LossConfig, lambda_edge=lo["lambda_edge"],
                      reduction=lo["reduction"], probability_floor=lo["probability_floor"]),
        trimap=_build("eval", TrimapSpec, bandwidths=tuple(ev["bands"]),
                      metric=ev["metric"], convention=ev["convention"]),
        num_classes=ev["num_classes"],
        ignore_index=d["ignore_index"],
        class_subset=None if ev["subset"] is None else tuple(ev["subset"]),
        viz=_build("viz", FlowColorSpec, max_magnitude=v["max_magnitude"], wheel=v["wheel"]),
        raw=d,
    )


def load_config(path=None, overrides=None) -> RunConfig:
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return build_config(doc, overrides)
