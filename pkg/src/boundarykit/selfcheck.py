"""Embedded oracle and gradient checks run by ``boundarykit selfcheck``.

Every check compares a fast code path against a slow, independent
evaluation (nested loops, brute-force search, finite differences) on
seeded random instances, and reports the worst error it saw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .augment import AugmentConfig, build_paste_mask, erode, paste, synthesize_pair
from .distance import distance_to
from .edges import neighbor_difference_edges
from .evaluation import ConfusionMatrix, TrimapSpec, accumulate, miou, trimap_band, trimap_miou
from .grid import DisplacementField, LabelMap, bilinear_upsample
from .losses import LossConfig, combined_loss, edge_bce, seg_cross_entropy
from .warp import WarpConfig, refine, warp, warp_backward


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28} worst={self.worst:.3e}  {self.detail}".rstrip()


# -- slow reference evaluations ---------------------------------------------

def loop_warp(features, dx, dy, border="clamp"):
    """Bilinear gather evaluated pixel by pixel."""
    c, h, w = features.shape
    out = np.zeros((c, h, w))
    for y in range(h):
        for x in range(w):
            sx, sy = x + dx[y, x], y + dy[y, x]
            if border == "clamp":
                sx = min(max(sx, 0.0), w - 1.0)
                sy = min(max(sy, 0.0), h - 1.0)
            x0, y0 = math.floor(sx), math.floor(sy)
            for yl in (y0, y0 + 1):
                for xl in (x0, x0 + 1):
                    wgt = (1 - abs(sx - xl)) * (1 - abs(sy - yl))
                    if 0 <= yl < h and 0 <= xl < w:
                        val = features[:, yl, xl]
                    elif border == "clamp":
                        val = features[:, min(yl, h - 1), min(xl, w - 1)]
                    else:
                        continue
                    out[:, y, x] += wgt * val
    return out


def scan_erode(mask, side):
    h, w = mask.shape
    r = side // 2
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            if y - r < 0 or x - r < 0 or y + r >= h or x + r >= w:
                continue
            out[y, x] = mask[y - r:y + r + 1, x - r:x + r + 1].all()
    return out


def nearest_seed_distance(seeds, metric):
    pts = np.argwhere(seeds)
    h, w = seeds.shape
    out = np.full((h, w), np.inf)
    if len(pts) == 0:
        return out
    for y in range(h):
        for x in range(w):
            d = np.abs(pts - (y, x))
            if metric == "euclidean":
                out[y, x] = np.sqrt((d.astype(np.float64) ** 2).sum(axis=1)).min()
            else:
                out[y, x] = d.max(axis=1).min()
    return out


# -- random instances --------------------------------------------------------

def random_warp_instance(rng, max_c=4, max_hw=12, max_disp=2.0):
    c = int(rng.integers(1, max_c + 1))
    h, w = (int(v) for v in rng.integers(1, max_hw + 1, size=2))
    feats = rng.normal(size=(c, h, w))
    disp = DisplacementField(rng.uniform(-max_disp, max_disp, (h, w)),
                             rng.uniform(-max_disp, max_disp, (h, w)))
    return feats, disp


def random_label_map(rng, h, w, num_classes=4, blobs=6, ignore_frac=0.0):
    d = np.full((h, w), int(rng.integers(num_classes)))
    for _ in range(blobs):
        y0, x0 = int(rng.integers(h)), int(rng.integers(w))
        bh, bw = int(rng.integers(1, h + 1)), int(rng.integers(1, w + 1))
        d[y0:y0 + bh, x0:x0 + bw] = int(rng.integers(num_classes))
    if ignore_frac:
        d[rng.random((h, w)) < ignore_frac] = 255
    return LabelMap(d, num_classes)


# -- checks ------------------------------------------------------------------

def check_warp_oracle(seed=0, instances=25):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(instances):
        feats, disp = random_warp_instance(rng)
        border = ("clamp", "zeros")[i % 2]
        got = warp(feats, disp, WarpConfig(border))
        ref = loop_warp(feats, disp.dx, disp.dy, border)
        worst = max(worst, float(np.abs(got - ref).max()))
    return CheckResult("warp oracle", worst < 1e-6, worst, f"{instances} instances, tol 1e-6")


def relative_error(a, b, floor=1e-8):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def warp_gradcheck(seed=0, instances=5, eps=1e-3, border="clamp"):
    """Worst relative errors of analytic warp gradients against central differences.

    Returns ``(worst_features, worst_disp, worst_adjoint, skipped)``. Displacement
    entries whose sample coordinate lies within ``eps`` of an integer are skipped,
    since the bilinear kernel has a kink there.
    """
    rng = np.random.default_rng(seed)
    cfg = WarpConfig(border)
    worst_f = worst_d = worst_adj = 0.0
    skipped = 0
    for _ in range(instances):
        feats, disp = random_warp_instance(rng, max_c=3, max_hw=7)
        c, h, w = feats.shape
        up = rng.normal(size=feats.shape)
        grads = warp_backward(feats, disp, up, cfg)

        def loss(f, dx, dy):
            return float((warp(f, DisplacementField(dx, dy), cfg) * up).sum())

        worst_adj = max(worst_adj, abs(float((warp(feats, disp, cfg) * up).sum())
                                       - float((feats * grads.d_features).sum())))

        num_f = np.zeros_like(feats)
        for idx in np.ndindex(feats.shape):
            fp, fm = feats.copy(), feats.copy()
            fp[idx] += eps
            fm[idx] -= eps
            num_f[idx] = (loss(fp, disp.dx, disp.dy) - loss(fm, disp.dx, disp.dy)) / (2 * eps)
        worst_f = max(worst_f, float(relative_error(grads.d_features, num_f).max()))

        rows, cols = np.mgrid[0:h, 0:w]
        for comp, base, coord in (("dx", disp.dx, cols + disp.dx), ("dy", disp.dy, rows + disp.dy)):
            analytic = getattr(grads.d_disp, comp)
            for y in range(h):
                for x in range(w):
                    s = coord[y, x]
                    if abs(s - round(s)) <= 2 * eps:
                        skipped += 1
                        continue
                    p, m = base.copy(), base.copy()
                    p[y, x] += eps
                    m[y, x] -= eps
                    if comp == "dx":
                        num = (loss(feats, p, disp.dy) - loss(feats, m, disp.dy)) / (2 * eps)
                    else:
                        num = (loss(feats, disp.dx, p) - loss(feats, disp.dx, m)) / (2 * eps)
                    worst_d = max(worst_d, float(relative_error(analytic[y, x], num)))
    return worst_f, worst_d, worst_adj, skipped


def check_gradients(seed=0, instances=5, eps=1e-3, tol=1e-3):
    worst = 0.0
    adj = 0.0
    for border in ("clamp", "zeros"):
        wf, wd, wa, _ = warp_gradcheck(seed, instances, eps, border)
        worst = max(worst, wf, wd)
        adj = max(adj, wa)
    ok = worst < tol and adj < 1e-5
    return CheckResult("warp gradients", ok, worst, f"adjoint={adj:.1e}, tol {tol:g}")


def check_identity(seed=0):
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(10):
        coarse = rng.normal(size=(int(rng.integers(1, 4)), int(rng.integers(1, 6)), int(rng.integers(1, 6))))
        h = coarse.shape[1] * int(rng.integers(1, 4))
        w = coarse.shape[2] * int(rng.integers(1, 4))
        zero = DisplacementField.zeros(h, w)
        ok &= np.array_equal(refine(coarse, zero), bilinear_upsample(coarse, h, w))
        feats = rng.normal(size=(2, h, w))
        for border in ("clamp", "zeros"):
            ok &= np.array_equal(warp(feats, zero, WarpConfig(border)), feats)
    return CheckResult("identity composition", bool(ok), 0.0 if ok else 1.0, "bit-exact")


def chebyshev_margin(pseudo: LabelMap, mask):
    """Smallest Chebyshev distance from a mask pixel to a pixel of another label."""
    best = np.inf
    d = pseudo.data
    for y, x in np.argwhere(mask):
        other = np.argwhere(d != d[y, x])
        if len(other):
            best = min(best, int(np.abs(other - (y, x)).max(axis=1).min()))
    return best


def check_erosion(seed=0, masks=100):
    rng = np.random.default_rng(seed)
    mismatches = 0
    for i in range(masks):
        h, w = (int(v) for v in rng.integers(1, 65, size=2))
        density = rng.uniform(0.5, 0.98)
        mask = rng.random((h, w)) < density
        if i % 3 == 0:
            mask |= random_label_map(rng, h, w, 2).data == 1
        side = int(rng.choice([1, 3, 5, 7]))
        mismatches += int((erode(mask, side) != scan_erode(mask, side)).sum())
    margin = np.inf
    cfg = AugmentConfig(pasteable_classes=(1, 2, 3), seed=seed)
    for _ in range(30):
        pseudo = random_label_map(rng, 24, 24, 4, blobs=8)
        mask, _ = build_paste_mask(pseudo, cfg, rng)
        margin = min(margin, chebyshev_margin(pseudo, mask))
    ok = mismatches == 0 and margin >= 2
    return CheckResult("erosion oracle", ok, float(mismatches), f"min margin={margin}")


def check_paste(seed=0):
    rng = np.random.default_rng(seed)
    h, w = 20, 24
    dst_img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
    src_img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
    dst = random_label_map(rng, h, w, 5)
    src = random_label_map(rng, h, w, 5)
    img, lab = paste(dst_img, dst, src_img, src, np.zeros((h, w), bool))
    ok = np.array_equal(img, dst_img) and lab == dst
    img, lab = paste(dst_img, dst, src_img, src, np.ones((h, w), bool))
    ok &= np.array_equal(img, src_img) and lab == src
    cfg = AugmentConfig(pasteable_classes=(1, 2, 3, 4), erode_side=3, seed=seed + 7)
    a = synthesize_pair(src_img, src, dst_img, dst, cfg)
    b = synthesize_pair(src_img, src, dst_img, dst, cfg)
    ok &= np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2].to_dict() == b[2].to_dict()
    return CheckResult("paste contract", bool(ok), 0.0 if ok else 1.0, "empty/full/rerun")


def check_losses():
    h, w = 6, 7
    labels = LabelMap(np.arange(h * w).reshape(h, w) % 19, 19)
    seg = seg_cross_entropy(np.full((19, h, w), 1 / 19), labels).total
    edge_target = (np.arange(h * w).reshape(h, w) % 3) == 0
    edge = edge_bce(np.full((1, h, w), 0.5), edge_target).total
    comb = combined_loss(np.full((19, h, w), 1 / 19), labels, np.full((1, h, w), 0.5), edge_target,
                         LossConfig(lambda_edge=0.1)).total
    errs = (abs(seg - math.log(19)) / 1e-4, abs(edge - math.log(2)) / 1e-6,
            abs(comb - (seg + 0.1 * edge)) / 1e-9)
    worst = max(errs)
    return CheckResult("loss values", worst < 1, worst, "errors as fractions of tolerance")


def check_metrics(seed=0):
    rng = np.random.default_rng(seed)
    _, m = miou(ConfusionMatrix(np.array([[3, 1], [1, 3]])))
    ok = m == 0.6
    gts = [random_label_map(rng, 30, 30, 5) for _ in range(3)]
    gts = [g for g in gts if neighbor_difference_edges(g).any()] or [
        LabelMap(np.repeat([[0, 1]], 4, axis=0).repeat(4, axis=1), 2)]
    ok &= all(v == 1.0 for v in trimap_miou(gts, gts, TrimapSpec()).bands.values())
    for _ in range(50):
        gt = random_label_map(rng, int(rng.integers(2, 33)), int(rng.integers(2, 33)), 4)
        prev = np.zeros(gt.shape, bool)
        for r in (1, 2, 4, 8, 16, 20):
            band = trimap_band(gt, r)
            ok &= not (prev & ~band).any()
            prev = band
    gt = gts[0]
    pred = LabelMap(np.where(rng.random(gt.shape) < 0.2, (gt.data + 1) % gt.num_classes, gt.data),
                    gt.num_classes)
    full = TrimapSpec(bandwidths=(10_000,))
    res = trimap_miou([pred], [gt], full)
    ok &= res.bands[10_000] == miou(accumulate(ConfusionMatrix.empty(gt.num_classes), pred, gt))[1]
    return CheckResult("metric correctness", bool(ok), 0.0 if ok else 1.0, "exact")


def check_distance(seed=0, maps=30):
    rng = np.random.default_rng(seed)
    worst_e = worst_c = 0.0
    for _ in range(maps):
        gt = random_label_map(rng, int(rng.integers(1, 33)), int(rng.integers(1, 33)), 4,
                              ignore_frac=float(rng.choice([0.0, 0.1])))
        edges = neighbor_difference_edges(gt)
        for metric in ("euclidean", "chebyshev"):
            ref = nearest_seed_distance(edges, metric)
            got = distance_to(edges, metric)
            finite = np.isfinite(ref)
            if not np.array_equal(finite, np.isfinite(got)):
                return CheckResult("distance transform", False, np.inf, "support mismatch")
            err = float(np.abs(got[finite] - ref[finite]).max()) if finite.any() else 0.0
            if metric == "euclidean":
                worst_e = max(worst_e, err)
            else:
                worst_c = max(worst_c, err)
            for r in (1, 3, 4, 8):
                if not np.array_equal(trimap_band(gt, r, metric), ref < r):
                    return CheckResult("distance transform", False, np.inf, f"band mismatch r={r}")
    ok = worst_c == 0.0 and worst_e < 1e-6
    return CheckResult("distance transform", ok, max(worst_e, worst_c), "chebyshev exact, euclidean 1e-6")


CHECKS = (
    check_warp_oracle,
    check_gradients,
    check_identity,
    check_erosion,
    check_paste,
    check_losses,
    check_metrics,
    check_distance,
)


def run_all():
    return [check() for check in CHECKS]
