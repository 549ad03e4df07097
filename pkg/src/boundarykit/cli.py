"""``boundarykit`` command-line entry point.

Exit codes: 0 success, 1 invalid arguments or configuration, 2 unreadable,
missing or malformed input data.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import io
from .augment import synthesize_pair
from .config import load_config
from .edges import extract_semantic_edges
from .errors import BoundaryKitError, ConfigError
from .evaluation import ConfusionMatrix, accumulate, miou, trimap_miou
from .grid import LabelMap
from .viz import colorize_labels, flow_to_rgb, parse_palette
from .warp import refine, warp

log = logging.getLogger("boundarykit")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DATA = 2

THREADS_ENV = "BOUNDARYKIT_THREADS"


class UsageError(ConfigError):
    pass


class DataError(BoundaryKitError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# -- argument parsing --------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON run configuration")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    g.add_argument("--log-level", default=argparse.SUPPRESS)
    g.add_argument("--output-dir", default=argparse.SUPPRESS,
                   help="relative output paths are placed under this directory")

    parser = _Parser(prog="boundarykit", parents=[common],
                     description="Semantic-edge, feature-warp, copy-paste and trimap tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def leaf(group, name, **kw):
        return group.add_parser(name, parents=[common], **kw)

    edges = sub.add_parser("edges").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(edges, "extract", help="semantic edges of a label PNG")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("neighbor", "canny"))
    p.add_argument("--sigma", type=float)
    p.add_argument("--low", type=float)
    p.add_argument("--high", type=float)
    p.add_argument("--ignore-index", type=int)

    wp = sub.add_parser("warp").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(wp, "apply", help="backward-warp a C x H x W tensor")
    p.add_argument("--features", required=True)
    p.add_argument("--disp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--border", choices=("clamp", "zeros"))
    p = leaf(wp, "refine", help="upsample a coarse tensor to the displacement grid, then warp")
    p.add_argument("--coarse", required=True)
    p.add_argument("--disp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--border", choices=("clamp", "zeros"))
    p = leaf(wp, "gradcheck", help="compare analytic warp gradients with finite differences")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--instances", type=int, default=5)
    p.add_argument("--border", choices=("clamp", "zeros"))

    au = sub.add_parser("augment").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(au, "paste", help="paste eroded target objects onto a destination pair")
    p.add_argument("--target-img", required=True)
    p.add_argument("--target-pseudo", required=True)
    p.add_argument("--dest-img", required=True)
    p.add_argument("--dest-labels", required=True)
    p.add_argument("--out-img", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--report")
    _augment_flags(p)
    p = leaf(au, "batch", help="run paste over a tab-separated manifest")
    p.add_argument("--manifest", required=True)
    _augment_flags(p)
    p = leaf(au, "demo", help="write a small synthetic target/destination pair")
    p.add_argument("--out-dir", required=True)

    ev = sub.add_parser("eval").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(ev, "miou", help="per-class IoU over a directory of label PNGs")
    _eval_flags(p)
    p = leaf(ev, "trimap", help="mIoU inside ground-truth boundary bands")
    _eval_flags(p)
    p.add_argument("--bands", type=_int_list)
    p.add_argument("--metric", choices=("euclidean", "chebyshev"))
    p.add_argument("--convention", choices=("full", "half"))

    vz = sub.add_parser("viz").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(vz, "flow", help="colour-code a displacement tensor")
    p.add_argument("--disp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-mag", type=float)
    p.add_argument("--wheel", choices=("hsv", "middlebury"))
    p = leaf(vz, "labels", help="colour a label PNG with a palette")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--palette", help="JSON list or mapping of class -> [r, g, b]")
    p.add_argument("--edges", action="store_true", help="overlay semantic edges in white")

    sub.add_parser("selfcheck", parents=[common], help="run the embedded oracle suites")
    return parser


def _augment_flags(p):
    p.add_argument("--classes", type=_int_list)
    p.add_argument("--erode-side", type=int)
    p.add_argument("--subset-size", type=int)
    p.add_argument("--min-pixels", type=int)


def _eval_flags(p):
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int)
    p.add_argument("--subset", type=_int_list)
    p.add_argument("--ignore-index", type=int)


def _overrides(args):
    """Translate flags into the config document layout."""
    o = {}
    for key in ("seed", "threads", "log_level", "output_dir"):
        if hasattr(args, key):
            o[key] = getattr(args, key)

    def put(section, key, attr):
        value = getattr(args, attr, None)
        if value is not None:
            o.setdefault(section, {})[key] = value

    put("edges", "method", "method")
    put("edges", "sigma", "sigma")
    put("edges", "low", "low")
    put("edges", "high", "high")
    put("warp", "border", "border")
    if args.command == "augment":
        put("augment", "classes", "classes")
    put("augment", "erode_side", "erode_side")
    put("augment", "subset_size", "subset_size")
    put("augment", "min_surviving_pixels", "min_pixels")
    if args.command == "eval":
        put("eval", "num_classes", "classes")
        put("eval", "subset", "subset")
        put("eval", "bands", "bands")
        put("eval", "metric", "metric")
        put("eval", "convention", "convention")
    if getattr(args, "ignore_index", None) is not None:
        o["ignore_index"] = args.ignore_index
    put("viz", "max_magnitude", "max_mag")
    put("viz", "wheel", "wheel")
    return o


# -- helpers -----------------------------------------------------------------

def _require(*paths):
    for p in paths:
        if not Path(p).is_file():
            raise DataError(f"input file not found: {p}")


def _out(cfg, path):
    path = Path(path)
    return path if path.is_absolute() else Path(cfg.output_dir) / path


def _threads(cfg):
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        return n
    return cfg.threads or os.cpu_count() or 1


# -- commands ----------------------------------------------------------------

def cmd_edges_extract(args, cfg):
    _require(args.labels)
    labels = io.read_label_png(args.labels, ignore_index=cfg.ignore_index)
    mask = extract_semantic_edges(labels, cfg.edges)
    io.write_mask_png(mask, _out(cfg, args.out))
    log.info("%d edge pixels written to %s", int(mask.sum()), args.out)


def cmd_warp_apply(args, cfg):
    _require(args.features, args.disp)
    feats = io.read_feature_map(args.features)
    disp = io.read_displacement(args.disp)
    io.write_tensor(warp(feats, disp, cfg.warp), _out(cfg, args.out))


def cmd_warp_refine(args, cfg):
    _require(args.coarse, args.disp)
    coarse = io.read_feature_map(args.coarse)
    disp = io.read_displacement(args.disp)
    io.write_tensor(refine(coarse, disp, cfg.warp), _out(cfg, args.out))


def cmd_warp_gradcheck(args, cfg):
    from .selfcheck import warp_gradcheck

    if args.eps <= 0 or args.tol <= 0 or args.instances < 1:
        raise ConfigError("--eps, --tol and --instances must be positive")
    wf, wd, wa, skipped = warp_gradcheck(cfg.seed, args.instances, args.eps, cfg.warp.border_mode)
    worst = max(wf, wd)
    print(f"d_features worst relative error {wf:.3e}")
    print(f"d_disp     worst relative error {wd:.3e} ({skipped} entries at integer coordinates skipped)")
    print(f"adjoint    absolute error       {wa:.3e}")
    ok = worst < args.tol and wa < 1e-5
    print(f"{'PASS' if ok else 'FAIL'} worst relative error {worst:.3e} (tol {args.tol:g})")
    return EXIT_OK if ok else EXIT_INVALID


def _read_pair(img_path, label_path, cfg):
    img = io.read_rgb_png(img_path)
    labels = io.read_label_png(label_path, num_classes=256, ignore_index=cfg.ignore_index)
    if img.shape[:2] != labels.shape:
        raise DataError(f"{img_path} is {img.shape[:2]} but {label_path} is {labels.shape}")
    return img, labels


def _paste_outputs(rec, cfg, seed):
    t_img, t_pseudo = _read_pair(rec.target_img, rec.target_pseudo, cfg)
    d_img, d_labels = _read_pair(rec.dest_img, rec.dest_labels, cfg)
    acfg = replace(cfg.augment, seed=seed)
    img, labels, report = synthesize_pair(t_img, t_pseudo, d_img, d_labels, acfg)
    doc = report.to_dict()
    doc["seed"] = seed
    files = {rec.out_img: io.encode_rgb_png(img), rec.out_labels: io.encode_label_png(labels)}
    if rec.report:
        files[rec.report] = io.encode_json(doc)
    io.write_files(files)
    return doc


@dataclass
class PasteRecord:
    target_img: Path
    target_pseudo: Path
    dest_img: Path
    dest_labels: Path
    out_img: Path
    out_labels: Path
    report: Path | None


def cmd_augment_paste(args, cfg):
    rec = PasteRecord(Path(args.target_img), Path(args.target_pseudo), Path(args.dest_img),
                      Path(args.dest_labels), _out(cfg, args.out_img), _out(cfg, args.out_labels),
                      _out(cfg, args.report) if args.report else None)
    _require(rec.target_img, rec.target_pseudo, rec.dest_img, rec.dest_labels)
    doc = _paste_outputs(rec, cfg, cfg.seed)
    log.info("pasted classes %s (%d pixels)", doc["chosen_classes"], doc["pasted_pixels"])


def read_manifest(path, out_dir):
    """Parse a manifest: one record per line, five tab-separated fields.

    Fields are target image, target pseudo-label, destination image,
    destination labels and output stem. Relative input paths are resolved
    against the manifest's directory; blank lines and ``#`` comments are skipped.
    """
    path = Path(path)
    base = path.parent
    records, stems = [], set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ConfigError(f"{path}:{lineno}: expected 5 tab-separated fields, got {len(fields)}")
        *inputs, stem = (f.strip() for f in fields)
        if stem in stems:
            raise ConfigError(f"{path}:{lineno}: duplicate output stem {stem!r}")
        stems.add(stem)
        inputs = [p if Path(p).is_absolute() else base / p for p in map(Path, inputs)]
        _require(*inputs)
        out = Path(out_dir)
        records.append(PasteRecord(*inputs, out / f"{stem}_img.png", out / f"{stem}_labels.png",
                                   out / f"{stem}_report.json"))
    return records


def cmd_augment_batch(args, cfg):
    _require(args.manifest)
    records = read_manifest(args.manifest, cfg.output_dir)
    threads = _threads(cfg)
    log.info("processing %d records on %d threads", len(records), threads)

    def work(item):
        i, rec = item
        try:
            _paste_outputs(rec, cfg, cfg.seed ^ i)
            return None
        except (BoundaryKitError, OSError) as exc:
            return f"record {i} ({rec.out_img.name}): {exc}"

    with ThreadPoolExecutor(max_workers=threads) as pool:
        failures = [f for f in pool.map(work, enumerate(records)) if f]
    for f in failures:
        log.error(f)
    return EXIT_DATA if failures else EXIT_OK


def cmd_augment_demo(args, cfg):
    from .demo import demo_pair

    t_img, t_pseudo, d_img, d_labels = demo_pair()
    out = _out(cfg, args.out_dir)
    io.write_files({
        out / "target.png": io.encode_rgb_png(t_img),
        out / "target_pseudo.png": io.encode_label_png(t_pseudo),
        out / "dest.png": io.encode_rgb_png(d_img),
        out / "dest_labels.png": io.encode_label_png(d_labels),
    })
    log.info("demo pair written to %s", out)


def _paired_files(pred_dir, gt_dir):
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise DataError(f"directory not found: {d}")
    names = sorted(p.name for p in gt_dir.glob("*.png"))
    if not names:
        raise DataError(f"no PNG files in {gt_dir}")
    pairs = []
    for name in names:
        if not (pred_dir / name).is_file():
            raise DataError(f"prediction missing for {gt_dir / name}: expected {pred_dir / name}")
        pairs.append((pred_dir / name, gt_dir / name))
    return pairs


def _load_pairs(pairs, cfg):
    preds, gts = [], []
    for p, g in pairs:
        gt = io.read_label_png(g, cfg.num_classes, cfg.ignore_index)
        pred = io.read_label_png(p, cfg.num_classes, cfg.ignore_index)
        if pred.shape != gt.shape:
            raise DataError(f"{p} is {pred.shape} but {g} is {gt.shape}")
        preds.append(pred)
        gts.append(gt)
    return preds, gts


def _iou_doc(cm, subset):
    per_class, mean = miou(cm, subset)
    return {
        "miou": mean,
        "per_class_iou": [None if np.isnan(v) else v for v in per_class],
        "pixels": cm.total,
    }


def cmd_eval_miou(args, cfg):
    preds, gts = _load_pairs(_paired_files(args.pred, args.gt), cfg)
    cm = ConfusionMatrix.empty(cfg.num_classes)
    for pred, gt in zip(preds, gts):
        cm = accumulate(cm, pred, gt)
    doc = {"num_classes": cfg.num_classes, "images": len(gts),
           "subset": list(cfg.class_subset) if cfg.class_subset else None}
    doc.update(_iou_doc(cm, cfg.class_subset))
    io.write_json(doc, _out(cfg, args.out))
    print(f"mIoU {doc['miou']:.4f} over {len(gts)} images")


def cmd_eval_trimap(args, cfg):
    preds, gts = _load_pairs(_paired_files(args.pred, args.gt), cfg)
    res = trimap_miou(preds, gts, cfg.trimap, cfg.num_classes, cfg.class_subset)
    doc = res.to_dict(cfg.class_subset)
    doc.update({"num_classes": cfg.num_classes, "images": len(gts), "metric": cfg.trimap.metric,
                "convention": cfg.trimap.convention,
                "subset": list(cfg.class_subset) if cfg.class_subset else None,
                "global": _iou_doc(res.global_cm, cfg.class_subset)})
    io.write_json(doc, _out(cfg, args.out))
    for b, v in res.bands.items():
        print(f"band {b:>4}: mIoU {v:.4f}")
    print(f"global   : mIoU {doc['global']['miou']:.4f}")


def cmd_viz_flow(args, cfg):
    _require(args.disp)
    disp = io.read_displacement(args.disp)
    io.write_rgb_png(flow_to_rgb(disp, cfg.viz), _out(cfg, args.out))


def cmd_viz_labels(args, cfg):
    import json

    _require(args.labels)
    palette = None
    if args.palette:
        _require(args.palette)
        try:
            palette = parse_palette(json.loads(Path(args.palette).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.palette}: invalid JSON: {exc}") from None
    labels = io.read_label_png(args.labels, num_classes=256, ignore_index=cfg.ignore_index)
    rgb = colorize_labels(labels, palette)
    if args.edges:
        from .viz import overlay_edges

        rgb = overlay_edges(rgb, extract_semantic_edges(labels))
    io.write_rgb_png(rgb, _out(cfg, args.out))


def cmd_selfcheck(args, cfg):
    from .selfcheck import run_all

    results = run_all()
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_INVALID


COMMANDS = {
    ("edges", "extract"): cmd_edges_extract,
    ("warp", "apply"): cmd_warp_apply,
    ("warp", "refine"): cmd_warp_refine,
    ("warp", "gradcheck"): cmd_warp_gradcheck,
    ("augment", "paste"): cmd_augment_paste,
    ("augment", "batch"): cmd_augment_batch,
    ("augment", "demo"): cmd_augment_demo,
    ("eval", "miou"): cmd_eval_miou,
    ("eval", "trimap"): cmd_eval_trimap,
    ("viz", "flow"): cmd_viz_flow,
    ("viz", "labels"): cmd_viz_labels,
    ("selfcheck", None): cmd_selfcheck,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(getattr(args, "config", None), _overrides(args))
    except FileNotFoundError as exc:
        print(f"error: config file not found: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=cfg.log_level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    handler = COMMANDS[(args.command, getattr(args, "action", None))]
    try:
        return handler(args, cfg) or EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (BoundaryKitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        where = f": {exc.filename}" if exc.filename else ""
        print(f"error: {exc.strerror or exc}{where}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run())
