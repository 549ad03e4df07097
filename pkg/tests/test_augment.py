import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundarykit.augment import (
    AugmentConfig,
    build_paste_mask,
    class_mask,
    erode,
    paste,
    synthesize_pair,
)
from boundarykit.errors import ConfigError, ShapeError
from boundarykit.grid import LabelMap

from conftest import blob_labels
from oracles import brute_distance, scan_erode


def test_class_mask_indicator():
    assert class_mask(LabelMap(np.full((3, 3), 2), 3), 2).all()
    assert not class_mask(LabelMap(np.full((3, 3), 1), 3), 2).any()
    checker = np.indices((4, 5)).sum(axis=0) % 2
    np.testing.assert_array_equal(class_mask(LabelMap(checker, 2), 1), checker == 1)
    with pytest.raises(ConfigError):
        class_mask(LabelMap(checker, 2), 2)


def test_erode_full_square():
    out = erode(np.ones((10, 10), bool), 5)
    expected = np.zeros((10, 10), bool)
    expected[2:8, 2:8] = True
    np.testing.assert_array_equal(out, expected)


def test_erode_identity_and_small_blob(rng):
    mask = rng.random((9, 7)) < 0.6
    np.testing.assert_array_equal(erode(mask, 1), mask)
    blob = np.zeros((9, 9), bool)
    blob[3:6, 3:6] = True
    assert not erode(blob, 5).any()


@pytest.mark.parametrize("side", [0, 2, 4, -3])
def test_even_side_rejected(side):
    with pytest.raises(ConfigError):
        erode(np.ones((5, 5), bool), side)
    with pytest.raises(ConfigError):
        AugmentConfig(erode_side=side)


def test_erode_matches_scan(rng):
    for _ in range(30):
        h, w = rng.integers(1, 30, 2)
        mask = rng.random((h, w)) < rng.uniform(0.6, 0.99)
        side = int(rng.choice([1, 3, 5, 7]))
        np.testing.assert_array_equal(erode(mask, side), scan_erode(mask, side))


masks = st.integers(0, 2**31).map(lambda s: np.random.default_rng(s).random((16, 16)) < 0.8)


@settings(max_examples=50, deadline=None)
@given(masks, masks, st.sampled_from([3, 5]))
def test_erode_anti_extensive_and_monotone(a, b, side):
    ea = erode(a, side)
    assert not (ea & ~a).any()
    small = a & b
    assert not (erode(small, side) & ~ea).any()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(-3, 3), st.integers(-3, 3))
def test_erode_commutes_with_translation(seed, dy, dx):
    rng = np.random.default_rng(seed)
    mask = np.zeros((30, 30), bool)
    mask[8:22, 8:22] = rng.random((14, 14)) < 0.9
    shifted = np.roll(mask, (dy, dx), axis=(0, 1))
    np.testing.assert_array_equal(erode(shifted, 5), np.roll(erode(mask, 5), (dy, dx), axis=(0, 1)))


# -- paste mask --------------------------------------------------------------

def test_no_pasteable_classes_present():
    mask, report = build_paste_mask(LabelMap(np.zeros((12, 12), int), 19), AugmentConfig(),
                                    np.random.default_rng(0))
    assert not mask.any() and report.chosen == []


def test_single_block_keeps_center():
    d = np.zeros((14, 14), int)
    d[2:12, 2:12] = 11
    mask, report = build_paste_mask(LabelMap(d, 19), AugmentConfig(), np.random.default_rng(0))
    expected = np.zeros((14, 14), bool)
    expected[4:10, 4:10] = True
    np.testing.assert_array_equal(mask, expected)
    assert report.chosen == [11] and report.pixel_counts == {11: 36}


def test_two_disjoint_blobs_union():
    d = np.zeros((12, 24), int)
    d[1:11, 1:11] = 11
    d[1:11, 13:23] = 13
    cfg = AugmentConfig(subset_size=2)
    mask, report = build_paste_mask(LabelMap(d, 19), cfg, np.random.default_rng(0))
    expected = erode(d == 11, 5) | erode(d == 13, 5)
    np.testing.assert_array_equal(mask, expected)
    assert not (erode(d == 11, 5) & erode(d == 13, 5)).any()
    assert report.chosen == [11, 13]


def test_surviving_pixel_threshold():
    d = np.zeros((12, 12), int)
    d[1:11, 1:11] = 11
    cfg = AugmentConfig(min_surviving_pixels=37)
    mask, report = build_paste_mask(LabelMap(d, 19), cfg, np.random.default_rng(0))
    assert not mask.any() and report.chosen == [] and report.sampled == [11]


def test_margin_to_other_classes(rng):
    cfg = AugmentConfig(pasteable_classes=(1, 2, 3))
    for _ in range(20):
        pseudo = blob_labels(rng, 24, 24, 4, blobs=8)
        mask, _ = build_paste_mask(pseudo, cfg, rng)
        for y, x in np.argwhere(mask):
            other = np.argwhere(pseudo.data != pseudo.data[y, x])
            if len(other):
                assert np.abs(other - (y, x)).max(axis=1).min() >= 3


def test_sampling_is_seeded(rng):
    pseudo = blob_labels(rng, 40, 40, 19, blobs=25)
    cfg = AugmentConfig(erode_side=1)
    runs = [build_paste_mask(pseudo, cfg, np.random.default_rng(9)) for _ in range(2)]
    np.testing.assert_array_equal(runs[0][0], runs[1][0])
    assert runs[0][1].to_dict() == runs[1][1].to_dict()


def test_bernoulli_subset_frequencies():
    d = np.repeat(np.array([5, 6, 7, 11]), 10)[None].repeat(8, axis=0)
    pseudo = LabelMap(d, 19)
    cfg = AugmentConfig(erode_side=1)
    rng = np.random.default_rng(0)
    counts = np.zeros(4)
    sizes = []
    for _ in range(2000):
        _, report = build_paste_mask(pseudo, cfg, rng)
        sizes.append(len(report.chosen))
        counts += [c in report.chosen for c in (5, 6, 7, 11)]
    assert min(sizes) >= 1
    # p = 0.5 plus the forced pick when nothing was drawn: 0.5 + 1/16 / 4
    np.testing.assert_allclose(counts / 2000, 0.5 + 1 / 64, atol=0.04)


# -- paste / synthesize ------------------------------------------------------

@pytest.fixture
def pairs(rng):
    h, w = 10, 12
    return (rng.integers(0, 256, (h, w, 3), dtype=np.uint8), blob_labels(rng, h, w, 5),
            rng.integers(0, 256, (h, w, 3), dtype=np.uint8), blob_labels(rng, h, w, 5))


def test_paste_empty_full_half(pairs):
    dst_img, dst, src_img, src = pairs
    h, w = dst.shape
    dst_copy, src_copy = dst_img.copy(), src_img.copy()
    img, lab = paste(dst_img, dst, src_img, src, np.zeros((h, w), bool))
    np.testing.assert_array_equal(img, dst_img)
    assert lab == dst
    img, lab = paste(dst_img, dst, src_img, src, np.ones((h, w), bool))
    np.testing.assert_array_equal(img, src_img)
    assert lab == src
    half = np.zeros((h, w), bool)
    half[:, : w // 2] = True
    img, lab = paste(dst_img, dst, src_img, src, half)
    for y in range(h):
        for x in range(w):
            s = x < w // 2
            assert (img[y, x] == (src_img if s else dst_img)[y, x]).all()
            assert lab.data[y, x] == (src if s else dst).data[y, x]
    np.testing.assert_array_equal(dst_img, dst_copy)
    np.testing.assert_array_equal(src_img, src_copy)


def test_paste_shape_mismatch(pairs):
    dst_img, dst, src_img, src = pairs
    with pytest.raises(ShapeError):
        paste(dst_img[:-1], dst, src_img, src, np.zeros(dst.shape, bool))


def test_paste_introduces_no_new_classes(rng, pairs):
    dst_img, dst, src_img, src = pairs
    _, lab = paste(dst_img, dst, src_img, src, rng.random(dst.shape) < 0.5)
    assert set(np.unique(lab.data)) <= set(np.unique(dst.data)) | set(np.unique(src.data))


def test_empty_subset_is_identity(pairs):
    dst_img, dst, src_img, src = pairs
    img, lab, report = synthesize_pair(src_img, src, dst_img, dst,
                                       AugmentConfig(pasteable_classes=(1, 2), subset_size=0))
    np.testing.assert_array_equal(img, dst_img)
    assert lab == dst and report.chosen == []


def test_person_blob_loses_its_border():
    h, w = 40, 40
    target = np.zeros((h, w), int)
    target[8:32, 12:26] = 11
    dest = np.full((h, w), 2)
    t_img = np.full((h, w, 3), 200, np.uint8)
    d_img = np.zeros((h, w, 3), np.uint8)
    img, lab, report = synthesize_pair(t_img, LabelMap(target, 19), d_img, LabelMap(dest, 19))
    pasted = lab.data == 11
    assert report.chosen == [11] and pasted.any()
    # distance from each blob pixel to the outside of the blob
    inside_dist = brute_distance(target != 11, "chebyshev")
    ring = (target == 11) & (inside_dist <= 2)
    assert not (pasted & ring).any()
    np.testing.assert_array_equal(img[..., 0] == 200, pasted)


def test_synthesize_deterministic(pairs):
    dst_img, dst, src_img, src = pairs
    cfg = AugmentConfig(pasteable_classes=(0, 1, 2, 3, 4), erode_side=3, seed=5)
    a = synthesize_pair(src_img, src, dst_img, dst, cfg)
    b = synthesize_pair(src_img, src, dst_img, dst, cfg)
    assert a[0].tobytes() == b[0].tobytes() and a[1] == b[1]
    assert a[2].to_dict() == b[2].to_dict()
