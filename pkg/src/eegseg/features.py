"""Per-channel EEG features: statistics, band powers, entropies, fractal dimensions, DFA.

Every feature function accepts a 1-D signal (returns a float) or a 2-D
array of equal-length signals, one per row (returns one value per row).
Values that are mathematically undefined for a signal are returned as NaN
and later imputed from the training fold.

Per channel the feature order is fixed:

====  ==================  ====  =========================
idx   name                idx   name
====  ==================  ====  =========================
0     mean                10    gamma_power
1     std                 11    permutation_entropy
2     variance            12    svd_entropy
3     peak_to_peak        13    approximate_entropy
4     skewness            14    sample_entropy
5     kurtosis            15    petrosian_fd
6     delta_power         16    katz_fd
7     theta_power         17    higuchi_fd
8     alpha_power         18    dfa_alpha
9     beta_power
====  ==================  ====  =========================

A multi-channel vector is channel-major: all 19 features of channel 0, then
channel 1, and so on.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import welch

from .signal import Segment

FEATURE_NAMES = (
    "mean", "std", "variance", "peak_to_peak", "skewness", "kurtosis",
    "delta_power", "theta_power", "alpha_power", "beta_power", "gamma_power",
    "permutation_entropy", "svd_entropy", "approximate_entropy", "sample_entropy",
    "petrosian_fd", "katz_fd", "higuchi_fd", "dfa_alpha",
)
N_FEATURES = len(FEATURE_NAMES)

EEG_BANDS = (
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 45.0),
)

# elements per boolean distance block in the template-matching entropies
_BLOCK_ELEMS = 2 ** 24


@dataclass(frozen=True)
class PsdParams:
    window: str = "hann"
    welch_segment_len: int | None = None  # None -> min(len(x), fs)
    overlap: float = 0.5


@dataclass(frozen=True)
class EntropyParams:
    m: int = 2
    r_factor: float = 0.2
    pe_order: int = 3
    pe_delay: int = 1
    svd_m: int = 10
    svd_delay: int = 1


@dataclass(frozen=True)
class DfaParams:
    min_box: int = 4
    max_box_fraction: float = 0.25
    n_scales: int = 10


@dataclass(frozen=True)
class FeatureParams:
    psd: PsdParams = field(default_factory=PsdParams)
    entropy: EntropyParams = field(default_factory=EntropyParams)
    higuchi_kmax: int = 10
    dfa: DfaParams = field(default_factory=DfaParams)

    def __post_init__(self):
        e = self.entropy
        if e.m < 1 or e.svd_m < 1:
            raise ValueError("embedding dimensions must be >= 1")
        if not e.r_factor > 0:
            raise ValueError("r_factor must be positive")
        if e.pe_order < 2 or e.pe_delay < 1 or e.svd_delay < 1:
            raise ValueError("pe_order must be >= 2 and delays >= 1")
        if self.higuchi_kmax < 2:
            raise ValueError("higuchi_kmax must be >= 2")
        if not 0.0 <= self.psd.overlap < 1.0:
            raise ValueError("psd overlap must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> FeatureParams:
        return cls(psd=PsdParams(**d.get("psd", {})),
                   entropy=EntropyParams(**d.get("entropy", {})),
                   higuchi_kmax=d.get("higuchi_kmax", 10),
                   dfa=DfaParams(**d.get("dfa", {})))


def _rows(x) -> tuple[np.ndarray, bool]:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        return np.ascontiguousarray(a)[None, :], True
    if a.ndim != 2:
        raise ValueError("expected a 1-D signal or a 2-D array of signals")
    # contiguous rows keep reduction order, and so every bit, independent of input layout
    return np.ascontiguousarray(a), False


def _out(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


# ---------------------------------------------------------------------------
# statistics


def statistical_features(x) -> np.ndarray:
    """Mean, population std and variance, peak-to-peak, skewness, excess kurtosis.

    Constant signals get skewness = kurtosis = 0.
    Returns shape (6,) for a 1-D input, (n, 6) for a 2-D input.
    """
    a, single = _rows(x)
    if a.shape[1] < 2:
        raise ValueError("statistical features need at least 2 samples")
    mean = a.mean(axis=1)
    dev = a - mean[:, None]
    m2 = (dev ** 2).mean(axis=1)
    m3 = (dev ** 3).mean(axis=1)
    m4 = (dev ** 4).mean(axis=1)
    ok = m2 > 0
    safe = np.where(ok, m2, 1.0)
    skew = np.where(ok, m3 / safe ** 1.5, 0.0)
    kurt = np.where(ok, m4 / safe ** 2 - 3.0, 0.0)
    out = np.stack([mean, np.sqrt(m2), m2, a.max(axis=1) - a.min(axis=1), skew, kurt], axis=1)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# spectrum


def band_powers(x, fs: float, params: PsdParams | None = None) -> np.ndarray:
    """Welch band power in delta, theta, alpha, beta and gamma.

    Hann window of ``min(len(x), fs)`` samples with 50% overlap; a signal
    shorter than two windows gets a single periodogram over its whole length.
    Power is the rectangle-rule integral of the PSD over the bins of each band.
    """
    params = params or PsdParams()
    a, single = _rows(x)
    n = a.shape[1]
    if n < 4:
        raise ValueError("band powers need at least 4 samples")
    nperseg = params.welch_segment_len or int(min(n, fs))
    nperseg = min(nperseg, n)
    if n < 2 * nperseg:
        nperseg = n
    noverlap = int(nperseg * params.overlap)
    # one row at a time: batched FFTs may differ in the last bit, and a
    # segment's features must not depend on what it was batched with
    nyq = fs / 2.0
    out = np.empty((a.shape[0], len(EEG_BANDS)))
    for i, row in enumerate(a):
        freqs, psd = welch(row, fs=fs, window=params.window, nperseg=nperseg,
                           noverlap=noverlap)
        df = freqs[1] - freqs[0]
        for j, (_, lo, hi) in enumerate(EEG_BANDS):
            lo, hi = max(lo, 0.0), min(hi, nyq)
            out[i, j] = psd[(freqs >= lo) & (freqs < hi)].sum() * df
    return out[0] if single else out


# ---------------------------------------------------------------------------
# entropies


def permutation_entropy(x, order: int = 3, delay: int = 1):
    """Shannon entropy of ordinal patterns, divided by ``log(order!)``.

    Equal values are ranked by position (stable argsort).
    """
    a, single = _rows(x)
    n_vec = a.shape[1] - (order - 1) * delay
    if order < 2 or delay < 1:
        raise ValueError("order must be >= 2 and delay >= 1")
    if n_vec < 2:
        raise ValueError("signal too short for the requested order and delay")
    idx = np.arange(n_vec)[:, None] + delay * np.arange(order)[None, :]
    ranks = np.argsort(a[:, idx], axis=-1, kind="stable")
    codes = (ranks * order ** np.arange(order)).sum(axis=-1)  # (rows, n_vec)
    n_codes = order ** order
    offsets = np.arange(a.shape[0])[:, None] * n_codes
    counts = np.bincount((codes + offsets).ravel(),
                         minlength=a.shape[0] * n_codes).reshape(a.shape[0], n_codes)
    p = counts / n_vec
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(p), 0.0).sum(axis=1)
    return _out(h / math.log(math.factorial(order)), single)


def svd_entropy(x, m: int = 10, delay: int = 1):
    """Normalized Shannon entropy of the singular spectrum of the delay embedding.

    NaN for an all-zero signal (empty spectrum).
    """
    a, single = _rows(x)
    n_vec = a.shape[1] - (m - 1) * delay
    if m < 2:
        raise ValueError("svd embedding dimension must be >= 2")
    if n_vec < 1:
        raise ValueError("signal too short for the requested embedding")
    idx = np.arange(n_vec)[:, None] + delay * np.arange(m)[None, :]
    sv = np.linalg.svd(a[:, idx], compute_uv=False)
    # round-off singular values (numerical rank cutoff) count as zero
    sv = np.where(sv > sv[:, :1] * max(n_vec, m) * np.finfo(float).eps, sv, 0.0)
    total = sv.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = sv / total
        h = -np.where(p > 0, p * np.log(p), 0.0).sum(axis=1)
    h = np.where(total[:, 0] > 0, h / math.log(m), np.nan)
    return _out(np.clip(h, 0.0, 1.0), single)


def _tolerance(a: np.ndarray, r, r_factor: float) -> np.ndarray:
    if r is None:
        return r_factor * a.std(axis=1)
    r = np.broadcast_to(np.asarray(r, dtype=np.float64), (a.shape[0],))
    if np.any(r < 0):
        raise ValueError("tolerance r must be non-negative")
    return r


def _match_stats(a: np.ndarray, m: int, r: np.ndarray):
    """Template-match counts for ApEn and SampEn under the Chebyshev distance.

    Returns per-row ``(phi_m, phi_m1, B, A)`` where phi are the ApEn log-averages
    (self matches included) and B, A are SampEn pair counts (self matches
    excluded) over the first ``n - m`` templates.
    """
    rows, n = a.shape
    phi_m = np.empty(rows)
    phi_m1 = np.empty(rows)
    b_count = np.empty(rows)
    a_count = np.empty(rows)
    step = max(1, _BLOCK_ELEMS // (n * n))
    for start in range(0, rows, step):
        blk = a[start:start + step]
        rr = r[start:start + step, None, None]
        close = np.abs(blk[:, :, None] - blk[:, None, :]) <= rr
        match = close
        for k in range(1, m):
            match = match[:, :n - k, :n - k] & close[:, k:, k:]
        # match: length-m templates, (n - m + 1)^2
        match1 = match[:, :n - m, :n - m] & close[:, m:, m:]
        c_m = match.sum(axis=2) / (n - m + 1)
        c_m1 = match1.sum(axis=2) / (n - m)
        sl = slice(start, start + blk.shape[0])
        phi_m[sl] = np.log(c_m).mean(axis=1)
        phi_m1[sl] = np.log(c_m1).mean(axis=1)
        b_count[sl] = match[:, :n - m, :n - m].sum(axis=(1, 2)) - (n - m)
        a_count[sl] = match1.sum(axis=(1, 2)) - (n - m)
    return phi_m, phi_m1, b_count, a_count


def approximate_entropy(x, m: int = 2, r=None, r_factor: float = 0.2):
    """ApEn = Phi(m) - Phi(m+1), self matches included; ``r`` defaults to ``r_factor * std``."""
    a, single = _rows(x)
    if a.shape[1] < m + 2:
        raise ValueError("signal too short for approximate entropy")
    phi_m, phi_m1, _, _ = _match_stats(a, m, _tolerance(a, r, r_factor))
    return _out(phi_m - phi_m1, single)


def sample_entropy(x, m: int = 2, r=None, r_factor: float = 0.2):
    """SampEn = -ln(A / B), self matches excluded; NaN when A or B is zero."""
    a, single = _rows(x)
    if a.shape[1] < m + 2:
        raise ValueError("signal too short for sample entropy")
    _, _, b, a_cnt = _match_stats(a, m, _tolerance(a, r, r_factor))
    return _out(_sampen_from_counts(a_cnt, b), single)


def _sampen_from_counts(a_cnt: np.ndarray, b: np.ndarray) -> np.ndarray:
    ok = (a_cnt > 0) & (b > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ok, -np.log(a_cnt / np.where(ok, b, 1.0)), np.nan)


# ---------------------------------------------------------------------------
# fractal dimensions


def petrosian_fd(x):
    a, single = _rows(x)
    n = a.shape[1]
    if n < 3:
        raise ValueError("Petrosian FD needs at least 3 samples")
    d = np.diff(a, axis=1)
    n_delta = (d[:, 1:] * d[:, :-1] < 0).sum(axis=1)
    ln = math.log10(n)
    fd = ln / (ln + np.log10(n / (n + 0.4 * n_delta)))
    return _out(fd, single)


def katz_fd(x):
    """Katz FD with amplitude distances; NaN when the signal never leaves its first value."""
    a, single = _rows(x)
    n = a.shape[1]
    if n < 3:
        raise ValueError("Katz FD needs at least 3 samples")
    length = np.abs(np.diff(a, axis=1)).sum(axis=1)
    extent = np.abs(a - a[:, :1]).max(axis=1)
    steps = math.log10(n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = steps + np.log10(extent / length)
        fd = steps / denom
    return _out(np.where((extent > 0) & (denom > 0), fd, np.nan), single)


def higuchi_fd(x, kmax: int = 10):
    """Slope of log L(k) against log(1/k) for k = 1..kmax, kmax capped at n // 4 (min 2)."""
    a, single = _rows(x)
    n = a.shape[1]
    if n < 3:
        raise ValueError("Higuchi FD needs at least 3 samples")
    kmax = max(2, min(kmax, n // 4))
    ks = np.arange(1, kmax + 1)
    log_len = np.empty((a.shape[0], kmax))
    for j, k in enumerate(ks):
        lk = np.zeros(a.shape[0])
        for m in range(k):
            n_steps = (n - 1 - m) // k
            if n_steps < 1:
                continue
            path = np.abs(np.diff(a[:, m::k][:, :n_steps + 1], axis=1)).sum(axis=1)
            lk += path * (n - 1) / (n_steps * k) / k
        with np.errstate(divide="ignore"):  # flat signal -> -inf -> NaN below
            log_len[:, j] = np.log(lk / k)
    x_fit = np.log(1.0 / ks)
    xc = x_fit - x_fit.mean()
    with np.errstate(invalid="ignore"):
        slope = ((log_len - log_len.mean(axis=1, keepdims=True)) * xc).sum(axis=1) / (xc ** 2).sum()
    return _out(np.where(np.isfinite(slope), slope, np.nan), single)


# ---------------------------------------------------------------------------
# detrended fluctuation analysis


def dfa_scales(n: int, params: DfaParams | None = None) -> np.ndarray:
    """Integer box sizes, log-spaced from ``min_box`` to ``n * max_box_fraction``."""
    params = params or DfaParams()
    top = int(math.floor(n * params.max_box_fraction))
    if n < 20 or top < params.min_box:
        return np.array([], dtype=int)
    grid = np.logspace(math.log10(params.min_box), math.log10(top), params.n_scales)
    return np.unique(np.floor(grid).astype(int))


def dfa_alpha(x, params: DfaParams | None = None):
    """DFA-1 scaling exponent; NaN when fewer than two box sizes fit the signal."""
    a, single = _rows(x)
    n = a.shape[1]
    scales = dfa_scales(n, params)
    if len(scales) < 2:
        return _out(np.full(a.shape[0], np.nan), single)
    profile = np.cumsum(a - a.mean(axis=1, keepdims=True), axis=1)
    log_f = np.empty((a.shape[0], len(scales)))
    for j, s in enumerate(scales):
        n_box = n // s
        boxes = profile[:, :n_box * s].reshape(a.shape[0], n_box, s)
        t = np.arange(s) - (s - 1) / 2.0
        centred = boxes - boxes.mean(axis=2, keepdims=True)
        slope = (centred * t).sum(axis=2, keepdims=True) / (t ** 2).sum()
        resid = centred - slope * t
        with np.errstate(divide="ignore"):
            log_f[:, j] = 0.5 * np.log((resid ** 2).mean(axis=(1, 2)))
    ls = np.log(scales)
    lc = ls - ls.mean()
    with np.errstate(invalid="ignore"):
        alpha = ((log_f - log_f.mean(axis=1, keepdims=True)) * lc).sum(axis=1) / (lc ** 2).sum()
    return _out(np.where(np.isfinite(alpha), alpha, np.nan), single)


# ---------------------------------------------------------------------------
# assembly


def channel_features(x, fs: float, params: FeatureParams | None = None) -> np.ndarray:
    """All 19 features for each row of ``x``; shape (rows, 19), NaN marks missing."""
    params = params or FeatureParams()
    a, _ = _rows(x)
    e = params.entropy
    out = np.empty((a.shape[0], N_FEATURES))
    out[:, 0:6] = statistical_features(a)
    out[:, 6:11] = band_powers(a, fs, params.psd)
    out[:, 11] = _guard(lambda: permutation_entropy(a, e.pe_order, e.pe_delay), a)
    out[:, 12] = _guard(lambda: svd_entropy(a, e.svd_m, e.svd_delay), a)
    if a.shape[1] >= e.m + 2:
        phi_m, phi_m1, b, a_cnt = _match_stats(a, e.m, _tolerance(a, None, e.r_factor))
        out[:, 13] = phi_m - phi_m1
        out[:, 14] = _sampen_from_counts(a_cnt, b)
    else:
        out[:, 13:15] = np.nan
    out[:, 15] = petrosian_fd(a)
    out[:, 16] = katz_fd(a)
    out[:, 17] = higuchi_fd(a, params.higuchi_kmax)
    out[:, 18] = dfa_alpha(a, params.dfa)
    return out


def _guard(fn, a):
    try:
        return fn()
    except ValueError:
        return np.full(a.shape[0], np.nan)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    subject_id: str
    duration_s: float
    values: np.ndarray  # (19 * n_channels,), NaN = missing

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)


def feature_index(channel: int, name: str) -> int:
    """Position of feature ``name`` of ``channel`` inside a channel-major vector."""
    return channel * N_FEATURES + FEATURE_NAMES.index(name)


def feature_matrix(segments, params: FeatureParams | None = None) -> np.ndarray:
    """Channel-major feature rows for equally shaped segments; shape (n, 19 * n_channels)."""
    segments = list(segments)
    if not segments:
        raise ValueError("no segments")
    fs = segments[0].fs
    stack = np.stack([s.samples for s in segments])  # (n, L, C)
    n, _, n_ch = stack.shape
    out = np.empty((n, n_ch, N_FEATURES))
    for c in range(n_ch):
        out[:, c, :] = channel_features(np.ascontiguousarray(stack[:, :, c]), fs, params)
    return out.reshape(n, n_ch * N_FEATURES)


def extract_vector(segment: Segment, params: FeatureParams | None = None) -> FeatureVector:
    return FeatureVector(segment.subject_id, segment.duration_s,
                         feature_matrix([segment], params)[0])
