import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import welch

from eegseg.features import (FEATURE_NAMES, N_FEATURES, DfaParams, EntropyParams, FeatureParams,
                             approximate_entropy, band_powers, channel_features, dfa_alpha,
                             dfa_scales, extract_vector, feature_index, feature_matrix,
                             higuchi_fd, katz_fd, permutation_entropy, petrosian_fd,
                             sample_entropy, statistical_features, svd_entropy)
from eegseg.signal import Segment
from oracles import apen_naive, permutation_entropy_naive, petrosian_naive, sampen_naive


def _noise(n, seed=0):
    return np.random.default_rng(seed).standard_normal(n)


# ---------------------------------------------------------------------------
# statistics


def test_statistical_small():
    mean, std, var, ptp, skew, kurt = statistical_features([1.0, 2.0, 3.0])
    assert mean == 2.0 and ptp == 2.0
    assert var == pytest.approx(2 / 3, abs=1e-15)
    assert std == pytest.approx(math.sqrt(2 / 3), abs=1e-15)


def test_symmetric_skew_zero():
    assert abs(statistical_features([-2.0, -1, 0, 1, 2])[4]) < 1e-12


def test_two_point_kurtosis():
    x = np.tile([1.0, -1.0], 50)
    assert statistical_features(x)[5] == pytest.approx(-2.0, abs=1e-12)


def test_constant_shape_stats_zero():
    out = statistical_features(np.full(20, 3.0))
    assert list(out) == [3.0, 0.0, 0.0, 0.0, 0.0, 0.0]


def test_statistics_match_scipy():
    from scipy import stats
    x = _noise(500, 3) ** 3
    out = statistical_features(x)
    assert out[4] == pytest.approx(stats.skew(x), rel=1e-12)
    assert out[5] == pytest.approx(stats.kurtosis(x), rel=1e-12)


# ---------------------------------------------------------------------------
# band powers


def test_zero_signal_band_powers():
    assert np.array_equal(band_powers(np.zeros(256), 128), np.zeros(5))


def test_alpha_sinusoid_dominates():
    fs = 128
    t = np.arange(4 * fs) / fs
    x = np.sin(2 * np.pi * 10 * t)
    powers = band_powers(x, fs)
    f, p = welch(x, fs=fs, window="hann", nperseg=fs, noverlap=fs // 2)
    total = p.sum() * (f[1] - f[0])
    assert powers[2] >= 0.95 * total


def test_white_noise_beta_fraction():
    fs = 128
    ratios = []
    for seed in range(50):
        x = _noise(8 * fs, seed)
        f, p = welch(x, fs=fs, window="hann", nperseg=fs, noverlap=fs // 2)
        ratios.append(band_powers(x, fs)[3] / (p.sum() * (f[1] - f[0])))
    expected = (30 - 13) / 64
    assert abs(np.mean(ratios) - expected) < 0.2 * expected


def test_short_segment_band_powers():
    # 0.1 s at 128 Hz: one periodogram over 12 samples
    out = band_powers(_noise(12), 128)
    assert out.shape == (5,) and np.all(out >= 0)
    with pytest.raises(ValueError):
        band_powers(np.ones(3), 128)


# ---------------------------------------------------------------------------
# permutation and SVD entropy


def test_pe_monotone_is_zero():
    for order in (2, 3, 4, 5):
        assert permutation_entropy(np.arange(50.0), order, 1) == 0.0


def test_pe_uniform_noise_near_one():
    x = np.random.default_rng(1).uniform(size=10000)
    assert abs(permutation_entropy(x, 3, 1) - 1.0) < 0.02


def test_pe_hand_example():
    x = [4, 7, 9, 10, 6, 11, 3]
    # 4 rising pairs, 2 falling
    expected = -(4 / 6 * math.log(4 / 6) + 2 / 6 * math.log(2 / 6)) / math.log(2)
    assert permutation_entropy(x, 2, 1) == pytest.approx(expected, abs=1e-15)
    assert permutation_entropy(x, 2, 1) == pytest.approx(permutation_entropy_naive(x, 2, 1),
                                                         abs=1e-15)


def test_pe_ties_use_position():
    x = [1.0, 1.0, 1.0, 2.0, 2.0, 0.0]
    for order, delay in ((2, 1), (3, 1), (3, 2)):
        assert permutation_entropy(x, order, delay) == pytest.approx(
            permutation_entropy_naive(x, order, delay), abs=1e-12)


@pytest.mark.parametrize("order,delay", [(3, 1), (4, 2), (5, 1)])
def test_pe_monotone_transform_invariance(order, delay):
    x = _noise(400, 4)
    base = permutation_entropy(x, order, delay)
    assert permutation_entropy(np.exp(x), order, delay) == base
    assert permutation_entropy(3 * x + 1, order, delay) == base


def test_pe_too_short():
    with pytest.raises(ValueError):
        permutation_entropy([1.0, 2.0], 3, 1)


def test_svd_entropy_cases():
    assert svd_entropy(np.full(100, 2.0)) == 0.0
    assert svd_entropy(_noise(4096, 2)) > 0.9
    t = np.arange(2000)
    # a period dividing the window gives two equal singular values
    assert svd_entropy(np.sin(2 * np.pi * t / 10.0)) == pytest.approx(
        math.log(2) / math.log(10), abs=1e-6)
    assert abs(svd_entropy(np.sin(2 * np.pi * t / 37.0)) - math.log(2) / math.log(10)) < 0.05
    assert math.isnan(svd_entropy(np.zeros(50)))


def test_svd_entropy_matches_direct_svd():
    x = _noise(300, 5)
    emb = np.array([x[i:i + 10] for i in range(len(x) - 9)])
    s = np.linalg.svd(emb, compute_uv=False)
    p = s / s.sum()
    expected = -(p * np.log(p)).sum() / math.log(10)
    assert svd_entropy(x, 10, 1) == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# ApEn / SampEn


def test_constant_signal_entropies_zero():
    x = np.full(50, 1.5)
    assert approximate_entropy(x) == 0.0
    assert sample_entropy(x) == 0.0


def test_periodic_sampen_zero():
    x = np.tile([1.0, 2.0], 100)
    assert sample_entropy(x, 2, 0.1) == 0.0
    assert sampen_naive(list(x), 2, 0.1) == 0.0


def test_sampen_noise_matches_oracle():
    x = _noise(1000, 6)
    r = 0.2 * x.std()
    assert abs(sample_entropy(x, 2) - sampen_naive(list(x), 2, r)) < 1e-9


def test_sampen_undefined_is_nan():
    # no template pair matches at all
    assert math.isnan(sample_entropy(np.arange(20.0), 2, 0.1))


def test_entropy_batch_matches_rows():
    x = np.random.default_rng(7).standard_normal((4, 60))
    for fn in (sample_entropy, approximate_entropy, svd_entropy, higuchi_fd, dfa_alpha,
               lambda a: band_powers(a, 128)):
        assert np.array_equal(fn(x), np.array([fn(row) for row in x]), equal_nan=True)


# ---------------------------------------------------------------------------
# fractal dimensions


def test_petrosian_cases():
    assert petrosian_fd(np.arange(30.0)) == 1.0
    x = np.tile([1.0, -1.0], 50)
    n = 100
    expected = math.log10(n) / (math.log10(n) + math.log10(n / (n + 0.4 * (n - 2))))
    assert petrosian_fd(x) == pytest.approx(expected, abs=1e-15)
    noise = _noise(1000, 8)
    assert 1.0 < petrosian_fd(noise) < 1.1
    assert petrosian_fd(noise) == pytest.approx(petrosian_naive(list(noise)), abs=1e-12)


def test_line_fractal_dimensions():
    t = np.arange(200.0)
    assert abs(katz_fd(t) - 1.0) < 1e-6
    assert abs(higuchi_fd(t) - 1.0) < 0.05


def test_katz_flat_is_missing():
    assert math.isnan(katz_fd(np.full(10, 4.0)))


def test_higuchi_theory():
    white = np.mean([higuchi_fd(_noise(2048, s)) for s in range(5)])
    brown = np.mean([higuchi_fd(np.cumsum(_noise(2048, s))) for s in range(5)])
    assert abs(white - 2.0) < 0.1
    assert abs(brown - 1.5) < 0.1


def test_fd_lower_bound():
    rng = np.random.default_rng(9)
    for _ in range(30):
        x = rng.standard_normal(rng.integers(12, 300)).cumsum() * rng.uniform(0.1, 10)
        for fn in (petrosian_fd, katz_fd, higuchi_fd):
            assert fn(x) >= 1 - 1e-9


# ---------------------------------------------------------------------------
# DFA


def test_dfa_theory():
    white = np.mean([dfa_alpha(_noise(4096, s)) for s in range(5)])
    brown = np.mean([dfa_alpha(np.cumsum(_noise(4096, s))) for s in range(5)])
    assert abs(white - 0.5) < 0.1
    assert abs(brown - 1.5) < 0.15


def test_dfa_short_is_missing():
    assert math.isnan(dfa_alpha(_noise(12)))


def test_dfa_scales():
    s = dfa_scales(4096)
    assert s[0] == 4 and s[-1] == 1024 and len(s) == 10
    assert np.all(np.diff(s) > 0)
    assert len(dfa_scales(20)) < 2 or dfa_scales(20)[-1] <= 5
    assert len(dfa_scales(100, DfaParams(n_scales=3))) == 3


# ---------------------------------------------------------------------------
# oracle equivalence and invariants


@pytest.mark.parametrize("n", [30, 100, 500])
def test_oracle_equivalence(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        x = rng.standard_normal(n)
        r = 0.2 * x.std()
        assert abs(approximate_entropy(x, 2) - apen_naive(list(x), 2, r)) < 1e-9
        mine, ref = sample_entropy(x, 2), sampen_naive(list(x), 2, r)
        assert (math.isnan(mine) and math.isnan(ref)) or abs(mine - ref) < 1e-9
        assert abs(permutation_entropy(x, 3, 1) - permutation_entropy_naive(list(x), 3, 1)) < 1e-9
        assert abs(petrosian_fd(x) - petrosian_naive(list(x))) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-1e3, 1e3))
def test_offset_invariance(seed, c):
    x = np.random.default_rng(seed).standard_normal(256)
    base = statistical_features(x)
    shifted = statistical_features(x + c)
    assert shifted[0] == pytest.approx(base[0] + c, abs=1e-9)
    assert np.allclose(shifted[2:], base[2:], atol=1e-6)
    assert permutation_entropy(x + c) == permutation_entropy(x)
    assert petrosian_fd(x + c) == petrosian_fd(x)
    assert higuchi_fd(x + c) == pytest.approx(higuchi_fd(x), abs=1e-9)
    assert dfa_alpha(x + c) == pytest.approx(dfa_alpha(x), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(20, 400))
def test_ranges(seed, n):
    x = np.random.default_rng(seed).standard_normal(n).cumsum()
    assert 0.0 <= permutation_entropy(x) <= 1.0
    assert 0.0 <= svd_entropy(x) <= 1.0
    assert np.all(band_powers(x, 128) >= 0)


# ---------------------------------------------------------------------------
# vectors


def _segment(n_channels, n=256, seed=0):
    samples = np.random.default_rng(seed).standard_normal((n, n_channels))
    return Segment("s1", 128.0, n / 128.0, samples, 0)


def test_vector_lengths():
    assert N_FEATURES == 19 == len(FEATURE_NAMES)
    assert len(extract_vector(_segment(14)).values) == 266
    assert len(extract_vector(_segment(16)).values) == 304


def test_channel_major_layout():
    seg = _segment(3)
    vec = extract_vector(seg).values
    per_channel = channel_features(seg.samples.T, 128.0)
    for c in range(3):
        for j, name in enumerate(FEATURE_NAMES):
            assert feature_index(c, name) == c * 19 + j
        assert np.array_equal(vec[c * 19:(c + 1) * 19], per_channel[c], equal_nan=True)


def test_zero_segment():
    vec = extract_vector(Segment("s", 128.0, 1.0, np.zeros((128, 2)), 0))
    v = vec.values[:19]
    assert np.all(v[:11] == 0)
    assert vec.missing.any()
    assert np.isnan(v[FEATURE_NAMES.index("katz_fd")])


def test_short_segment_flags_dfa_missing():
    vec = extract_vector(_segment(2, n=12))
    assert vec.missing[FEATURE_NAMES.index("dfa_alpha")]
    assert np.isfinite(vec.values[:6]).all()


def test_feature_matrix_deterministic_and_consistent():
    segs = [_segment(2, seed=s) for s in range(3)]
    a = feature_matrix(segs)
    b = feature_matrix(segs)
    assert np.array_equal(a, b, equal_nan=True)
    assert np.array_equal(a[1], extract_vector(segs[1]).values, equal_nan=True)


def test_feature_params_validation_and_roundtrip():
    with pytest.raises(ValueError):
        FeatureParams(entropy=EntropyParams(m=0))
    with pytest.raises(ValueError):
        FeatureParams(entropy=EntropyParams(r_factor=0))
    with pytest.raises(ValueError):
        FeatureParams(entropy=EntropyParams(pe_order=1))
    with pytest.raises(ValueError):
        FeatureParams(higuchi_kmax=1)
    p = FeatureParams(higuchi_kmax=8, dfa=DfaParams(n_scales=6))
    assert FeatureParams.from_dict(p.to_dict()) == p
