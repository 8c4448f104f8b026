import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from meshcrack.errors import DimensionError, ParameterError
from meshcrack.pcd import (
    PcdConfig,
    ablation_variants,
    compute_crack_map,
    contrast_modulate,
    crack_artifact_score,
    initial_crack_map,
    is_crack_map,
    laplacian_modulate,
    truncated_abs_diff,
    truncated_sigmoid,
)

import oracles

pairs = st.integers(2, 16).flatmap(
    lambda h: st.integers(2, 16).flatmap(
        lambda w: st.tuples(
            arrays(np.float64, (h, w), elements=st.floats(0, 1)),
            arrays(np.float64, (h, w), elements=st.floats(0, 1)),
        )
    )
)


def test_config_defaults_and_validation():
    cfg = PcdConfig()
    assert (cfg.tad_threshold, cfg.c1, cfg.t1, cfg.window_size, cfg.window_sigma) == \
        (0.1, 0.01, 2.0, 5, 1.5)
    assert cfg.contrast_modulation and cfg.laplacian_modulation
    for bad in ({"tad_threshold": 1.0}, {"c1": 0}, {"t1": -1}, {"window_size": 4},
                {"window_sigma": 0}):
        with pytest.raises(ParameterError):
            PcdConfig(**bad)


def test_tad_examples():
    a = np.array([[0.3, 0.55, 0.95]])
    assert np.array_equal(truncated_abs_diff(a, a), np.zeros_like(a))
    assert truncated_abs_diff([[0.55]], [[0.50]])[0, 0] == 0.0
    assert truncated_abs_diff([[0.95]], [[0.05]])[0, 0] == pytest.approx(0.9, abs=1e-15)


def test_tad_keeps_value_at_threshold():
    assert truncated_abs_diff([[0.25]], [[0.0]], 0.25)[0, 0] == 0.25
    assert truncated_abs_diff([[0.2499]], [[0.0]], 0.25)[0, 0] == 0.0


def test_tad_dimension_mismatch():
    with pytest.raises(DimensionError):
        truncated_abs_diff(np.zeros((2, 2)), np.zeros((2, 3)))


def test_contrast_modulate_examples():
    assert contrast_modulate([[0.2]], [[0.0]])[0, 0] == pytest.approx(20.0, rel=1e-15)
    assert contrast_modulate([[0.0]], [[0.7]])[0, 0] == 0.0
    assert contrast_modulate([[0.3]], [[0.29]])[0, 0] == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DimensionError):
        contrast_modulate(np.zeros((2, 2)), np.zeros((3, 2)))


def test_laplacian_modulate_examples():
    assert laplacian_modulate([[20.0]], [[-2.0]])[0, 0] == 40.0
    assert np.array_equal(laplacian_modulate(np.ones((3, 3)), np.zeros((3, 3))), np.zeros((3, 3)))
    rng = np.random.default_rng(0)
    m, lap = rng.random((8, 8)) * 50, rng.normal(size=(8, 8))
    expected = [[m[i, j] * abs(lap[i, j]) for j in range(8)] for i in range(8)]
    assert np.allclose(laplacian_modulate(m, lap), expected, atol=1e-15, rtol=0)


def test_truncated_sigmoid_examples():
    t1 = 2.0
    out = truncated_sigmoid(np.array([[t1, 2 * t1, 100 * t1, 0.0]]), t1)
    assert out[0, 0] == 0.0
    assert out[0, 1] == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-15)
    assert out[0, 1] == pytest.approx(0.731059, abs=1e-6)
    assert 0.999999 < out[0, 2] <= 1.0
    assert out[0, 3] == 0.0


def test_truncated_sigmoid_just_above_knee_stays_above_half():
    t1 = 3.0
    v = truncated_sigmoid(np.array([[np.nextafter(t1, 10.0)]]), t1)[0, 0]
    assert v > 0.5


def test_identical_frames_give_zero_map():
    f = np.random.default_rng(1).random((20, 24))
    assert np.array_equal(compute_crack_map(f, f), np.zeros_like(f))


def test_single_column_crack_is_localized():
    ref = np.full((20, 20), 0.8)
    dist = ref.copy()
    dist[:, 10] = 0.1
    m = compute_crack_map(ref, dist)
    expected = oracles.crack_map(ref.tolist(), dist.tolist())
    assert np.allclose(m, expected, atol=1e-12, rtol=0)
    # TAD is nonzero only on the altered column
    assert np.all(m[:, 10] > 0.5)
    assert np.count_nonzero(m) == 20


def test_both_stages_off_small_difference():
    ref = np.full((8, 8), 0.5)
    cfg = PcdConfig(contrast_modulation=False, laplacian_modulation=False)
    assert np.array_equal(compute_crack_map(ref, ref + 0.05, cfg), np.zeros((8, 8)))


def test_crack_artifact_score_examples():
    assert crack_artifact_score(np.zeros((4, 4))) == 0.0
    assert crack_artifact_score(np.ones((4, 4))) == 1.0
    half = np.zeros((4, 4))
    half[:2] = 1.0
    assert crack_artifact_score(half) == 0.5
    with pytest.raises(ParameterError):
        crack_artifact_score(np.zeros((0, 3)))


@settings(max_examples=100)
@given(pairs)
def test_crack_map_codomain(pair):
    ref, dist = pair
    assert is_crack_map(compute_crack_map(ref, dist))


@settings(max_examples=100)
@given(pairs, st.floats(0, 0.99))
def test_tad_is_symmetric(pair, t):
    a, b = pair
    assert np.array_equal(truncated_abs_diff(a, b, t), truncated_abs_diff(b, a, t))


def _scalar_chain(d, sigma, lap, cfg=PcdConfig()):
    tad = truncated_abs_diff([[d]], [[0.0]], cfg.tad_threshold)
    m = contrast_modulate(tad, [[sigma]], cfg.c1)
    m = laplacian_modulate(m, [[lap]])
    return truncated_sigmoid(m, cfg.t1)[0, 0]


def test_response_monotone_in_difference():
    ds = np.linspace(0, 1, 201)
    for sigma in (0.0, 0.05, 0.2, 0.4):
        for lap in (0.01, 0.3, 1.0, 4.0):
            vals = [_scalar_chain(d, sigma, lap) for d in ds]
            assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_response_never_increases_with_contrast():
    sigmas = np.linspace(0, 0.5, 101)
    for d in (0.1, 0.3, 0.9):
        for lap in (0.1, 1.0, 4.0):
            vals = [_scalar_chain(d, s, lap) for s in sigmas]
            assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_staged_pipeline_matches_single_pass_oracle():
    rng = np.random.default_rng(5)
    for _ in range(10):
        ref = rng.random((16, 16))
        dist = np.clip(ref + rng.normal(0, 0.3, ref.shape), 0, 1)
        expected = oracles.crack_map(ref.tolist(), dist.tolist())
        assert np.allclose(compute_crack_map(ref, dist), expected, atol=1e-12, rtol=0)


@pytest.mark.parametrize("contrast, lap", [(False, True), (True, False), (False, False)])
def test_ablation_flags_match_oracle(contrast, lap):
    rng = np.random.default_rng(6)
    ref = rng.random((12, 12))
    dist = np.clip(ref + rng.normal(0, 0.3, ref.shape), 0, 1)
    cfg = PcdConfig(contrast_modulation=contrast, laplacian_modulation=lap, t1=0.3)
    expected = oracles.crack_map(ref.tolist(), dist.tolist(), contrast=contrast, lap=lap, t1=0.3)
    assert np.allclose(compute_crack_map(ref, dist, cfg), expected, atol=1e-12, rtol=0)


def test_both_flags_off_equals_sigmoid_of_tad():
    rng = np.random.default_rng(7)
    ref, dist = rng.random((10, 10)), rng.random((10, 10))
    cfg = PcdConfig(contrast_modulation=False, laplacian_modulation=False, t1=0.2)
    assert np.array_equal(
        compute_crack_map(ref, dist, cfg),
        truncated_sigmoid(truncated_abs_diff(ref, dist, cfg.tad_threshold), cfg.t1),
    )


def test_initial_map_is_nonnegative():
    rng = np.random.default_rng(8)
    ref, dist = rng.random((10, 10)), rng.random((10, 10))
    assert np.all(initial_crack_map(ref, dist) >= 0)


def test_ablation_variants():
    v = ablation_variants()
    assert list(v) == ["full", "no_contrast", "no_laplacian", "neither"]
    assert v["full"] == PcdConfig()
    assert not v["neither"].contrast_modulation and not v["neither"].laplacian_modulation
    assert v["neither"].t1 == pytest.approx(0.02)
    assert v["no_contrast"].t1 == pytest.approx(0.02)
    assert v["no_laplacian"].t1 == 2.0
