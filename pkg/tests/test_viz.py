import colorsys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundarykit import io
from boundarykit.errors import ConfigError
from boundarykit.grid import DisplacementField, LabelMap
from boundarykit.viz import (
    FlowColorSpec,
    color_wheel,
    colorize_labels,
    flow_to_rgb,
    overlay_edges,
    parse_palette,
)


def hue_deg(rgb):
    h, s, v = colorsys.rgb_to_hsv(*(np.asarray(rgb, float) / 255))
    return h * 360, s, v


def hue_resolution(*pixels):
    """Hue uncertainty in degrees from 8-bit rounding, for two quantized pixels."""
    chroma = min(int(p.max()) - int(p.min()) for p in pixels)
    return 2 * 60.0 / chroma + 0.5


def hue_gap(a, b):
    d = abs(a - b) % 360
    return min(d, 360 - d)


def test_zero_flow_is_white():
    out = flow_to_rgb(DisplacementField.zeros(4, 5))
    assert out.dtype == np.uint8 and (out == 255).all()


def test_opposite_vectors_complementary():
    m = 2.5
    disp = DisplacementField([[m, -m]], [[0.0, 0.0]])
    out = flow_to_rgb(disp, FlowColorSpec(max_magnitude=m))
    (h0, s0, _), (h1, s1, _) = hue_deg(out[0, 0]), hue_deg(out[0, 1])
    assert s0 == 1.0 and s1 == 1.0
    assert hue_gap(h0, h1) == pytest.approx(180, abs=0.5)


def test_eight_angles_ordered():
    angles = np.arange(8) * np.pi / 4
    # screen y points down, so counter-clockwise needs -sin
    disp = DisplacementField([np.cos(angles)], [-np.sin(angles)])
    out = flow_to_rgb(disp, FlowColorSpec(max_magnitude=1.0))
    hues = [hue_deg(out[0, i])[0] for i in range(8)]
    assert len({round(h) for h in hues}) == 8
    np.testing.assert_allclose(hues, np.degrees(angles), atol=0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 2 * np.pi))
def test_rotation_consistency(seed, theta):
    rng = np.random.default_rng(seed)
    dx, dy = rng.normal(size=(2, 1, 6))
    # rotate on screen: y axis points down
    rdx = np.cos(theta) * dx + np.sin(theta) * dy
    rdy = -np.sin(theta) * dx + np.cos(theta) * dy
    spec = FlowColorSpec(max_magnitude=0.5)
    a = flow_to_rgb(DisplacementField(dx, dy), spec)
    b = flow_to_rgb(DisplacementField(rdx, rdy), spec)
    for i in range(6):
        ha, hb = hue_deg(a[0, i])[0], hue_deg(b[0, i])[0]
        assert hue_gap(hb, (ha + np.degrees(theta)) % 360) < hue_resolution(a[0, i], b[0, i])


def test_negation_maps_to_complement(rng):
    dx, dy = rng.normal(size=(2, 3, 3))
    spec = FlowColorSpec(max_magnitude=0.1)
    a = flow_to_rgb(DisplacementField(dx, dy), spec)
    b = flow_to_rgb(DisplacementField(-dx, -dy), spec)
    for i in np.ndindex(3, 3):
        gap = hue_gap(hue_deg(a[i])[0], hue_deg(b[i])[0])
        assert gap == pytest.approx(180, abs=hue_resolution(a[i], b[i]))


def test_default_scale_and_saturation():
    disp = DisplacementField([[0.0, 1.0, 100.0]], [[0.0, 0.0, 0.0]])
    out = flow_to_rgb(disp)
    assert (out[0, 0] == 255).all()
    np.testing.assert_array_equal(out[0, 2], [255, 0, 0])


def test_middlebury_wheel_shape():
    wheel = color_wheel("middlebury")
    assert wheel.shape == (55, 3)
    np.testing.assert_array_equal(wheel[0], [1, 0, 0])
    assert (flow_to_rgb(DisplacementField.zeros(2, 2), FlowColorSpec(wheel="middlebury")) == 255).all()


def test_spec_validation():
    with pytest.raises(ConfigError):
        FlowColorSpec(max_magnitude=0)
    with pytest.raises(ConfigError):
        FlowColorSpec(wheel="rainbow")


def test_colorize_labels():
    labels = LabelMap([[0, 1], [255, 1]], 2)
    out = colorize_labels(labels, {0: (1, 2, 3), 1: (4, 5, 6)})
    np.testing.assert_array_equal(out, [[[1, 2, 3], [4, 5, 6]], [[0, 0, 0], [4, 5, 6]]])
    with pytest.raises(ConfigError):
        colorize_labels(labels, {0: (1, 2, 3)})


def test_colorize_round_trip(tmp_path, rng):
    labels = LabelMap(rng.integers(0, 19, (7, 8)), 19)
    rgb = colorize_labels(labels)
    io.write_rgb_png(rgb, tmp_path / "c.png")
    np.testing.assert_array_equal(io.read_rgb_png(tmp_path / "c.png"), rgb)


def test_overlay(rng):
    img = rng.integers(0, 256, (4, 5, 3), dtype=np.uint8)
    np.testing.assert_array_equal(overlay_edges(img, np.zeros((4, 5), bool)), img)
    full = overlay_edges(img, np.ones((4, 5), bool), (9, 8, 7))
    assert (full == [9, 8, 7]).all()


def test_parse_palette():
    assert parse_palette([[1, 2, 3], [4, 5, 6]]) == {0: (1, 2, 3), 1: (4, 5, 6)}
    assert parse_palette({"3": [0, 0, 0]}) == {3: (0, 0, 0)}
    with pytest.raises(ConfigError):
        parse_palette({"a": [0, 0, 0]})
    with pytest.raises(ConfigError):
        parse_palette([[0, 0, 300]])
