import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import N_BINS, otsu_exhaustive, random_histogram

from aortatrack.classify import (
    ClassifyParams,
    classify_pixels,
    classify_tree,
    histogram,
    otsu_threshold,
    partition_component,
)
from aortatrack.errors import EmptyHistogram
from aortatrack.track import track_volume
from aortatrack.volume_io import Rescale

FIXED = ClassifyParams(mode="fixed", fixed_threshold=1500)
OTSU = ClassifyParams(mode="otsu")


def _deltas(**mass):
    h = np.zeros(N_BINS, dtype=np.int64)
    for v, c in mass.items():
        h[int(v[1:])] = c
    return h


def test_otsu_single_bin():
    assert otsu_threshold(_deltas(v500=9)) == (500, 0.0)


def test_otsu_two_deltas_takes_smallest_maximiser():
    assert otsu_threshold(_deltas(v100=4, v200=4)) == (100, 1.0)


def test_otsu_symmetric_triple_tie():
    # splitting after 0 or after 10 gives the same between-class variance
    h = _deltas(v0=1, v10=1, v20=1)
    assert otsu_threshold(h)[0] == 0 == otsu_exhaustive(h)[0]


def test_otsu_two_gaussians_match_oracle():
    rng = np.random.default_rng(1234)
    a = rng.normal(1200, 50, 1000)
    b = rng.normal(2500, 80, 1000)
    h = histogram(np.clip(np.rint(np.concatenate([a, b])), 0, 65535).astype(np.uint16))
    got = otsu_threshold(h)
    assert got == otsu_exhaustive(h)
    assert 1300 < got[0] < 2300
    assert got[1] > 0.9


def test_otsu_matches_oracle_on_seeded_histograms():
    rng = np.random.default_rng(42)
    for _ in range(300):
        h = random_histogram(rng)
        assert otsu_threshold(h) == otsu_exhaustive(h)


def test_otsu_empty_histogram():
    with pytest.raises(EmptyHistogram):
        otsu_threshold(np.zeros(N_BINS, dtype=np.int64))


@settings(max_examples=60, deadline=None)
@given(values=arrays(np.uint16, st.integers(1, 60), elements=st.integers(0, 4000)))
def test_otsu_separability_in_unit_interval(values):
    t, sep = otsu_threshold(histogram(values))
    assert 0.0 <= sep <= 1.0
    assert values.min() <= t <= values.max()


def test_fixed_all_below():
    assert not classify_pixels(np.array([1200, 1300, 1400]), FIXED).any()


def test_fixed_hand_example():
    calc = classify_pixels(np.array([1200, 1200, 1600, 2000]), FIXED)
    assert calc.tolist() == [False, False, True, True]


def test_fixed_threshold_is_inclusive():
    assert classify_pixels(np.array([1499, 1500]), FIXED).tolist() == [False, True]


def test_default_fixed_threshold_depends_on_rescale():
    params = ClassifyParams()
    assert params.resolved_threshold(None) == 1500
    assert params.resolved_threshold(Rescale(1.0, -1024.0)) == 130


def test_fixed_mode_compares_physical_units():
    # raw 1154 -> 130 HU with intercept -1024
    raw = np.array([1153, 1154, 1500])
    calc = classify_pixels(raw, ClassifyParams(), Rescale(1.0, -1024.0))
    assert calc.tolist() == [False, True, True]


@settings(max_examples=80, deadline=None)
@given(
    values=arrays(np.uint16, st.integers(1, 40)),
    t=st.integers(0, 65535),
    dt=st.integers(0, 65535),
)
def test_fixed_mode_monotone(values, t, dt):
    low = classify_pixels(values, ClassifyParams(fixed_threshold=t))
    high = classify_pixels(values, ClassifyParams(fixed_threshold=t + dt))
    assert not (high & ~low).any()


def test_otsu_uniform_component_is_all_lumen():
    assert not classify_pixels(np.full(50, 1800), OTSU).any()


def test_otsu_mode_splits_bimodal_component():
    values = np.array([1200] * 40 + [2200] * 10)
    calc = classify_pixels(values, OTSU)
    assert calc.sum() == 10 and np.all(values[calc] == 2200)


def test_otsu_mode_respects_separability_floor():
    values = np.array([1200] * 60 + [1210] * 40)
    _, sep = otsu_threshold(histogram(values))
    assert sep == 1.0
    assert classify_pixels(values, OTSU).sum() == 40
    flat = np.array([1200, 1201, 1202, 1203, 1300])
    _, sep = otsu_threshold(histogram(flat))
    assert classify_pixels(flat, ClassifyParams(mode="otsu", separability_min=sep)).sum() == 1
    assert not classify_pixels(flat, ClassifyParams(mode="otsu", separability_min=min(1.0, sep + 1e-9))).any()


def test_gaussian_lumen_separability_is_near_two_over_pi():
    # a unimodal normal sample split at its mean keeps about 2/pi of the variance
    rng = np.random.default_rng(3)
    noisy = np.rint(rng.normal(1200, 40, 20_000)).astype(np.uint16)
    _, sep = otsu_threshold(histogram(noisy))
    assert sep == pytest.approx(2 / np.pi, abs=0.01)
    assert not classify_pixels(noisy, ClassifyParams(mode="otsu", separability_min=0.7)).any()


def test_unknown_mode():
    with pytest.raises(ValueError):
        classify_pixels(np.array([1]), ClassifyParams(mode="kmeans"))


@settings(max_examples=60, deadline=None)
@given(
    values=arrays(np.uint16, st.integers(1, 80), elements=st.integers(0, 5000)),
    mode=st.sampled_from(["fixed", "otsu"]),
)
def test_partition_is_disjoint_and_exhaustive(values, mode):
    slice_ = values.reshape(1, -1)
    flat = np.arange(values.size)
    p = partition_component(flat, slice_, 0, ClassifyParams(mode=mode))
    assert len(np.intersect1d(p.lumen, p.calc)) == 0
    assert np.array_equal(np.sort(np.concatenate([p.lumen, p.calc])), flat)


@pytest.mark.parametrize("mode", ["fixed", "otsu"])
def test_partition_invariant_on_phantom(stenosis20, mode):
    vol, _ = stenosis20
    tree = track_volume(vol)
    parts = classify_tree(tree, vol, ClassifyParams(mode=mode))
    assert set(parts) == {n.node_id for n in tree.nodes()}
    for node in tree.nodes():
        p = parts[node.node_id]
        flat = node.component.flat_indices(vol.width)
        assert len(np.intersect1d(p.lumen, p.calc)) == 0
        assert np.array_equal(np.sort(np.concatenate([p.lumen, p.calc])), np.sort(flat))


@pytest.mark.parametrize("threshold", [1201, 1500, 2200])
def test_stenosis20_calc_equals_lesion_label(stenosis20, threshold):
    vol, gt = stenosis20
    tree = track_volume(vol)
    parts = classify_tree(tree, vol, ClassifyParams(fixed_threshold=threshold))
    got = np.zeros(gt.labels.shape, dtype=bool)
    for node in tree.nodes():
        got[node.slice_index].ravel()[parts[node.node_id].calc] = True
    assert np.array_equal(got, gt.labels == 2)
