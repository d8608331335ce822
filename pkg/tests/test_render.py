import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aortatrack.classify import Partition
from aortatrack.errors import EmptySeries, InvalidWindow, MalformedHeader
from aortatrack.render import (
    CALC_RGB,
    LUMEN_RGB,
    grayscale,
    plot_profile_svg,
    ppm_bytes,
    profile_svg,
    read_ppm,
    render_overlay,
    write_ppm,
)


def test_grayscale_window():
    s = np.array([[0, 500, 1000, 1250, 2500, 4000]], np.uint16)
    assert grayscale(s, 0, 2500).tolist() == [[0, 51, 102, 128, 255, 255]]
    assert grayscale(s, 1000, 2000).tolist() == [[0, 0, 0, 64, 255, 255]]


def test_grayscale_matches_float_formula():
    v = np.arange(0, 3001, dtype=np.uint16)
    lo, hi = 100, 2600
    t = np.clip((v.astype(float) - lo) / (hi - lo), 0, 1) * 255
    assert np.array_equal(grayscale(v, lo, hi), np.floor(t + 0.5).astype(np.uint8))


def test_invalid_window():
    with pytest.raises(InvalidWindow):
        grayscale(np.zeros((1, 1), np.uint16), 5, 5)


def test_nothing_tracked_is_plain_grayscale():
    s = np.random.default_rng(0).integers(0, 3000, (8, 9), dtype=np.uint16)
    img = render_overlay(s, [], (0, 2500))
    g = grayscale(s, 0, 2500)
    assert img.shape == (8, 9, 3)
    assert all(np.array_equal(img[:, :, c], g) for c in range(3))


def test_partition_colours():
    s = np.full((3, 3), 1200, np.uint16)
    img = render_overlay(s, [Partition(0, np.array([0, 1]), np.array([4]))], (0, 2500))
    assert tuple(img[0, 0]) == LUMEN_RGB == (0, 0, 255)
    assert tuple(img[0, 1]) == LUMEN_RGB
    assert tuple(img[1, 1]) == CALC_RGB == (255, 0, 0)
    assert tuple(img[2, 2]) == (122, 122, 122)


@settings(max_examples=50, deadline=None)
@given(
    s=arrays(np.uint16, (6, 7)),
    picks=st.lists(st.integers(0, 41), unique=True, max_size=20),
    split=st.integers(0, 20),
)
def test_overlay_only_recolours_tracked_pixels(s, picks, split):
    picks = np.array(picks, dtype=np.int64)
    p = Partition(0, picks[:split], picks[split:])
    img = render_overlay(s, [p], (0, 2500)).reshape(-1, 3)
    g = grayscale(s, 0, 2500).ravel()
    untouched = np.setdiff1d(np.arange(42), picks)
    assert np.all(img[untouched] == g[untouched, None])
    assert np.all(img[p.lumen] == LUMEN_RGB)
    assert np.all(img[p.calc] == CALC_RGB)


def test_ppm_single_red_pixel():
    img = np.array([[[255, 0, 0]]], np.uint8)
    assert ppm_bytes(img) == b"P6\n1 1\n255\n\xff\x00\x00"


def test_ppm_roundtrip(tmp_path):
    img = np.random.default_rng(1).integers(0, 256, (5, 7, 3), dtype=np.uint8)
    write_ppm(img, tmp_path / "a.ppm")
    assert np.array_equal(read_ppm(tmp_path / "a.ppm"), img)


def test_ppm_rejects_other_formats(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P5\n1 1\n255\n\x00")
    with pytest.raises(MalformedHeader):
        read_ppm(tmp_path / "a.pgm")


def _polyline(svg):
    pts = re.search(r'<polyline points="([^"]*)"', svg).group(1)
    return [tuple(float(c) for c in p.split(",")) for p in pts.split()]


def test_svg_all_zero_series_is_flat_on_the_axis():
    pts = _polyline(profile_svg([0, 0, 0], "flat"))
    assert [y for _, y in pts] == [360.0] * 3
    assert [x for x, _ in pts] == [60.0, 420.0, 780.0]


def test_svg_endpoints():
    assert _polyline(profile_svg([0, 1], "ramp")) == [(60.0, 360.0), (780.0, 20.0)]


def test_svg_empty_series():
    with pytest.raises(EmptySeries):
        profile_svg([], "nothing")


def test_svg_uses_only_basic_elements():
    svg = profile_svg([0.1, 0.5, 0.2], "Stenosis & <profile>")
    assert set(re.findall(r"<([a-z]+)", svg)) == {"svg", "line", "polyline", "text"}
    assert "Stenosis &amp; &lt;profile&gt;" in svg
    assert "0.500000" in svg


@settings(max_examples=40, deadline=None)
@given(series=st.lists(st.floats(0, 1e6), min_size=1, max_size=50))
def test_svg_points_stay_in_plot_area(series):
    for x, y in _polyline(profile_svg(series, "t")):
        assert 60 <= x <= 780 and 20 <= y <= 360


def test_svg_is_deterministic(tmp_path):
    series = list(np.random.default_rng(2).random(200))
    plot_profile_svg(series, "s", tmp_path / "a.svg")
    plot_profile_svg(series, "s", tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
