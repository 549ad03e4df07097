"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the worst error seen,
visible even without ``-s``.
"""
import math

import numpy as np
import pytest

from boundarykit.augment import AugmentConfig, build_paste_mask, erode, paste, synthesize_pair
from boundarykit.cli import run
from boundarykit.distance import distance_to
from boundarykit.edges import extract_semantic_edges
from boundarykit.evaluation import ConfusionMatrix, TrimapSpec, accumulate, miou, trimap_band, trimap_miou
from boundarykit.grid import DisplacementField, LabelMap, bilinear_upsample
from boundarykit.losses import LossConfig, combined_loss, edge_bce, seg_cross_entropy
from boundarykit.warp import WarpConfig, refine, warp, warp_backward

from conftest import blob_labels
from oracles import brute_distance, central_difference, loop_warp, scan_edges, scan_erode


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, f"criterion {number} failed: {detail}"
    return emit


def test_c01_warp_oracle(report):
    rng = np.random.default_rng(1)
    worst = 0.0
    for i in range(25):
        c = int(rng.integers(1, 5))
        h, w = (int(v) for v in rng.integers(1, 13, 2))
        feats = rng.normal(size=(c, h, w))
        dx, dy = rng.uniform(-2, 2, (2, h, w))
        border = ("clamp", "zeros")[i % 2]
        got = warp(feats, DisplacementField(dx, dy), WarpConfig(border))
        worst = max(worst, float(np.abs(got - loop_warp(feats, dx, dy, border)).max()))
    report(1, "warp vs nested-loop bilinear gather", worst < 1e-6, f"max abs err {worst:.2e} (tol 1e-6)")


def test_c02_gradient_check(report):
    eps = 1e-3
    worst_rel = worst_adj = 0.0
    skipped = 0
    for seed in range(5):
        rng = np.random.default_rng(200 + seed)
        c = int(rng.integers(1, 4))
        h, w = (int(v) for v in rng.integers(2, 8, 2))
        feats = rng.normal(size=(c, h, w))
        dx, dy = rng.uniform(-2, 2, (2, h, w))
        up = rng.normal(size=feats.shape)
        for border in ("clamp", "zeros"):
            cfg = WarpConfig(border)
            disp = DisplacementField(dx, dy)
            g = warp_backward(feats, disp, up, cfg)

            def loss(f, ddx, ddy):
                return float((warp(f, DisplacementField(ddx, ddy), cfg) * up).sum())

            pairs = [(g.d_features, central_difference(lambda f: loss(f, dx, dy), feats, eps), None)]
            rows, cols = np.mgrid[0:h, 0:w]
            for analytic, fn, coord in (
                (g.d_disp.dx, lambda v: loss(feats, v, dy), cols + dx),
                (g.d_disp.dy, lambda v: loss(feats, dx, v), rows + dy),
            ):
                base = dx if analytic is g.d_disp.dx else dy
                keep = np.abs(coord - np.rint(coord)) > 2 * eps
                skipped += int((~keep).sum())
                pairs.append((analytic, central_difference(fn, base, eps), keep))
            for analytic, numeric, keep in pairs:
                rel = np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
                if keep is not None:
                    rel = rel[keep]
                worst_rel = max(worst_rel, float(rel.max(initial=0)))
            adj = abs(float((warp(feats, disp, cfg) * up).sum()) - float((feats * g.d_features).sum()))
            worst_adj = max(worst_adj, adj)
    ok = worst_rel < 1e-3 and worst_adj < 1e-5
    report(2, "warp gradients vs central differences", ok,
           f"max rel err {worst_rel:.2e} (tol 1e-3), adjoint err {worst_adj:.2e} (tol 1e-5), "
           f"{skipped} integer-coordinate entries skipped")


def test_c03_identity_composition(report):
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(20):
        coarse = rng.normal(size=(int(rng.integers(1, 4)), int(rng.integers(1, 6)), int(rng.integers(1, 6))))
        h, w = coarse.shape[1] * int(rng.integers(1, 5)), coarse.shape[2] * int(rng.integers(1, 5))
        zero = DisplacementField.zeros(h, w)
        ok &= np.array_equal(refine(coarse, zero), bilinear_upsample(coarse, h, w))
        feats = rng.normal(size=(3, h, w)).astype(np.float32)
        for border in ("clamp", "zeros"):
            ok &= warp(feats, zero, WarpConfig(border)).tobytes() == feats.astype(np.float64).tobytes()
    report(3, "refine(., 0) == upsample and warp(., 0) == identity", bool(ok), "bit-exact on 20 instances")


def test_c04_erosion_and_margin(report):
    rng = np.random.default_rng(4)
    mismatches = 0
    for i in range(100):
        h, w = (int(v) for v in rng.integers(1, 65, 2))
        mask = rng.random((h, w)) < rng.uniform(0.5, 0.99)
        if i % 2:
            mask |= blob_labels(rng, h, w, 2).data == 1
        side = int(rng.choice([1, 3, 5, 7]))
        mismatches += int((erode(mask, side) != scan_erode(mask, side)).sum())
    margin = math.inf
    cfg = AugmentConfig(pasteable_classes=(1, 2, 3))
    pasted = 0
    for _ in range(40):
        pseudo = blob_labels(rng, 32, 32, 4, blobs=8)
        mask, _ = build_paste_mask(pseudo, cfg, rng)
        pasted += int(mask.sum())
        for y, x in np.argwhere(mask):
            other = np.argwhere(pseudo.data != pseudo.data[y, x])
            if len(other):
                margin = min(margin, int(np.abs(other - (y, x)).max(axis=1).min()))
    ok = mismatches == 0 and margin >= 2 and pasted > 0
    report(4, "erosion vs window scan; paste-mask margin", ok,
           f"{mismatches} mismatching pixels over 100 masks, min Chebyshev margin {margin} (need >= 2)")


def test_c05_paste_contract(report):
    rng = np.random.default_rng(5)
    h, w = 24, 32
    dst_img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
    src_img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
    dst, src = blob_labels(rng, h, w, 19, 10), blob_labels(rng, h, w, 19, 10)
    img, lab = paste(dst_img, dst, src_img, src, np.zeros((h, w), bool))
    empty_ok = np.array_equal(img, dst_img) and lab == dst
    img, lab = paste(dst_img, dst, src_img, src, np.ones((h, w), bool))
    full_ok = np.array_equal(img, src_img) and lab == src
    cfg = AugmentConfig(pasteable_classes=tuple(range(19)), erode_side=3, seed=11)
    a = synthesize_pair(src_img, src, dst_img, dst, cfg)
    b = synthesize_pair(src_img, src, dst_img, dst, cfg)
    rerun_ok = a[0].tobytes() == b[0].tobytes() and a[1].data.tobytes() == b[1].data.tobytes()
    ok = empty_ok and full_ok and rerun_ok and a[2].to_dict() == b[2].to_dict()
    report(5, "paste piecewise contract and determinism", ok,
           f"empty={empty_ok} full={full_ok} rerun-identical={rerun_ok}")


def test_c06_loss_values(report):
    rng = np.random.default_rng(6)
    labels = LabelMap(rng.integers(0, 19, (9, 11)), 19)
    edges = rng.random((9, 11)) < 0.3
    seg = seg_cross_entropy(np.full((19, 9, 11), 1 / 19), labels).total
    edge = edge_bce(np.full((1, 9, 11), 0.5), edges).total
    comb = combined_loss(np.full((19, 9, 11), 1 / 19), labels, np.full((1, 9, 11), 0.5), edges,
                         LossConfig(lambda_edge=0.1))
    e_seg, e_edge = abs(seg - 2.9444), abs(edge - 0.6931)
    e_exact_edge = abs(edge - math.log(2))
    e_comb = abs(comb.total - (seg + 0.1 * edge))
    ok = e_seg <= 1e-4 and e_exact_edge <= 1e-6 and e_edge <= 1e-4 and e_comb <= 1e-9
    report(6, "loss values", ok,
           f"seg {seg:.6f} (ln19, err {e_seg:.1e}), edge {edge:.7f} (ln2, err {e_exact_edge:.1e}), "
           f"combined err {e_comb:.1e}")


def test_c07_metrics(report):
    rng = np.random.default_rng(7)
    _, m = miou(ConfusionMatrix(np.array([[3, 1], [1, 3]])))
    gts = [blob_labels(rng, 48, 48, 6, 10) for _ in range(4)]
    perfect = trimap_miou(gts, gts, TrimapSpec(bandwidths=(4, 8, 16, 20))).bands
    monotone = True
    for _ in range(50):
        gt = blob_labels(rng, int(rng.integers(2, 40)), int(rng.integers(2, 40)), 4)
        prev = np.zeros(gt.shape, bool)
        for r in (1, 2, 3, 4, 6, 8, 12, 16, 20):
            band = trimap_band(gt, r)
            monotone &= not (prev & ~band).any()
            prev = band
    preds = [LabelMap(np.where(rng.random(g.shape) < 0.25, rng.integers(0, 6, g.shape), g.data), 6) for g in gts]
    full = trimap_miou(preds, gts, TrimapSpec(bandwidths=(1000,)))
    cm = ConfusionMatrix.empty(6)
    for p, g in zip(preds, gts):
        cm = accumulate(cm, p, g)
    full_ok = full.bands[1000] == miou(cm)[1]
    ok = m == 0.6 and all(v == 1.0 for v in perfect.values()) and monotone and full_ok
    report(7, "metric correctness", ok,
           f"mIoU([[3,1],[1,3]])={m!r}, perfect bands={perfect}, monotone={monotone}, full-band==global={full_ok}")


def test_c08_distance_transform(report):
    rng = np.random.default_rng(8)
    worst = {"euclidean": 0.0, "chebyshev": 0.0}
    mismatched = 0
    for _ in range(40):
        gt = blob_labels(rng, int(rng.integers(1, 33)), int(rng.integers(1, 33)), 4,
                         ignore_frac=float(rng.choice([0.0, 0.1])))
        seeds = scan_edges(gt.data)
        for metric in worst:
            ref = brute_distance(seeds, metric)
            for r in (1, 2, 4, 8, 16, 20):
                mismatched += int((trimap_band(gt, r, metric) != (ref < r)).sum())
            got = distance_to(seeds, metric)
            fin = np.isfinite(ref)
            if fin.any():
                worst[metric] = max(worst[metric], float(np.abs(got[fin] - ref[fin]).max()))
    ok = worst["chebyshev"] == 0.0 and worst["euclidean"] < 1e-6 and mismatched == 0
    report(8, "distance transform vs brute-force nearest boundary", ok,
           f"chebyshev err {worst['chebyshev']:.1e} (exact), euclidean err {worst['euclidean']:.1e} "
           f"(tol 1e-6), band mismatches {mismatched}")


def test_c09_boundary_degradation(report):
    rng = np.random.default_rng(9)
    gts, noisy, clean = [], [], []
    for _ in range(4):
        gt = blob_labels(rng, 96, 96, 6, blobs=8)
        near = brute_distance(scan_edges(gt.data), "chebyshev") <= 1
        corrupt = near & (rng.random(gt.shape) < 0.6)
        wrong = (gt.data + rng.integers(1, 6, gt.shape)) % 6
        gts.append(gt)
        noisy.append(LabelMap(np.where(corrupt, wrong, gt.data), 6))
        clean.append(gt.with_data(gt.data.copy()))
    r_noisy = trimap_miou(noisy, gts)
    r_clean = trimap_miou(clean, gts)
    g_noisy, g_clean = miou(r_noisy.global_cm)[1], miou(r_clean.global_cm)[1]
    ok = r_noisy.bands[4] < g_noisy and r_clean.bands[4] >= g_clean
    report(9, "boundary degradation shows up in the band-4 trimap", ok,
           f"noisy band4 {r_noisy.bands[4]:.4f} < global {g_noisy:.4f}; "
           f"clean band4 {r_clean.bands[4]:.4f} vs global {g_clean:.4f}")


def test_c10_selfcheck(report, capsys):
    code = run(["selfcheck"])
    out = capsys.readouterr().out
    report(10, "boundarykit selfcheck", code == 0 and out.strip().endswith("PASS"), f"exit code {code}")
