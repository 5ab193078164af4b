"""Recordings, dataset ingestion, synthetic EEG, bandpass filtering and segmentation.

Dataset files on disk are a JSON manifest plus one headerless CSV per
recording::

    {"name": "stew", "fs": 128, "channels": ["AF3", ...],
     "recordings": [{"subject_id": "s01", "condition": "rest", "file": "s01.csv"}]}

Relative ``file`` entries resolve against the manifest's directory.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

logger = logging.getLogger(__name__)

DEFAULT_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5,
                4.0, 4.5, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
GRID_BOUNDS = (0.1, 10.0)

# (low, high) Hz for the synthetic band oscillators
SYNTH_BANDS = {
    "delta": (1.0, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 13.0),
    "beta": (13.0, 30.0),
    "gamma": (30.0, 45.0),
}


class DatasetError(ValueError):
    """Malformed or inconsistent dataset input."""


@dataclass(frozen=True, eq=False)
class Recording:
    subject_id: str
    channels: tuple[str, ...]
    fs: float
    samples: np.ndarray  # (n_samples, n_channels)
    condition: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2:
            raise DatasetError("samples must be a 2-D array (n_samples, n_channels)")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.fs > 0:
            raise DatasetError(f"sampling rate must be positive, got {self.fs}")
        if samples.shape[0] < 1:
            raise DatasetError("recording has no samples")
        if samples.shape[1] != len(self.channels):
            raise DatasetError(
                f"inconsistent channels: {samples.shape[1]} columns for "
                f"{len(self.channels)} channel names")
        if len(set(self.channels)) != len(self.channels):
            raise DatasetError("channel names must be unique")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    recordings: tuple[Recording, ...]

    def __post_init__(self):
        object.__setattr__(self, "recordings", tuple(self.recordings))
        if not self.recordings:
            raise DatasetError("dataset has no recordings")
        channels = self.recordings[0].channels
        for rec in self.recordings[1:]:
            if rec.channels != channels:
                raise DatasetError(
                    f"inconsistent channels: recording of {rec.subject_id!r} has "
                    f"{len(rec.channels)} channels, expected {len(channels)}")
        if len(self.subjects) < 2:
            raise DatasetError("identification needs at least 2 distinct subjects")

    @property
    def subjects(self) -> tuple[str, ...]:
        """Unique subject ids in order of first appearance."""
        return tuple(dict.fromkeys(r.subject_id for r in self.recordings))

    @property
    def channels(self) -> tuple[str, ...]:
        return self.recordings[0].channels

    @property
    def fs(self) -> float:
        return self.recordings[0].fs

    def select(self, condition: str | None) -> Dataset:
        """Recordings with the given condition tag; ``None`` keeps everything."""
        if condition is None:
            return self
        recs = [r for r in self.recordings if r.condition == condition]
        if not recs:
            raise DatasetError(f"no recordings with condition {condition!r}")
        return Dataset(f"{self.name}:{condition}", recs)


@dataclass(frozen=True, eq=False)
class Segment:
    subject_id: str
    fs: float
    duration_s: float
    samples: np.ndarray  # (L, n_channels)
    source_offset: int


# ---------------------------------------------------------------------------
# ingestion


def load_dataset(manifest_path) -> Dataset:
    """Read a JSON manifest and its per-recording CSV files."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DatasetError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest is not valid JSON: {exc}") from exc
    for key in ("name", "fs", "channels", "recordings"):
        if key not in manifest:
            raise DatasetError(f"manifest missing key {key!r}")

    fs = float(manifest["fs"])
    channels = tuple(manifest["channels"])
    root = manifest_path.parent
    recordings = []
    for entry in manifest["recordings"]:
        path = root / entry["file"]
        if not path.is_file():
            raise DatasetError(f"recording file not found: {path}")
        samples = _read_csv_matrix(path)
        if samples.shape[1] != len(channels):
            raise DatasetError(
                f"inconsistent channels: {path.name} has {samples.shape[1]} "
                f"columns, manifest lists {len(channels)}")
        recordings.append(Recording(str(entry["subject_id"]), channels, fs,
                                    samples, str(entry.get("condition", ""))))
    return Dataset(str(manifest["name"]), recordings)


def _read_csv_matrix(path: Path) -> np.ndarray:
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DatasetError(f"{path.name}:{lineno}: ragged row "
                                   f"({len(cells)} cells, expected {width})")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DatasetError(f"{path.name}:{lineno}: non-numeric cell") from None
    if not rows:
        raise DatasetError(f"{path.name}: no samples")
    return np.array(rows, dtype=np.float64)


def write_dataset(dataset: Dataset, out_dir) -> Path:
    """Write ``dataset`` as manifest + CSVs under ``out_dir``; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, rec in enumerate(dataset.recordings):
        fname = f"rec{i:03d}_{rec.subject_id}.csv"
        lines = [",".join(repr(float(v)) for v in row) for row in rec.samples]
        _atomic_write(out_dir / fname, "\n".join(lines) + "\n")
        entries.append({"subject_id": rec.subject_id, "condition": rec.condition,
                        "file": fname})
    manifest = {"name": dataset.name, "fs": dataset.fs,
                "channels": list(dataset.channels), "recordings": entries}
    path = out_dir / "manifest.json"
    _atomic_write(path, json.dumps(manifest, indent=2) + "\n")
    return path


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# synthetic generator


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the per-subject generative model.

    Each subject gets, per channel and band, one oscillator whose amplitude
    (uV) is drawn from ``band_amplitudes[band]`` and whose frequency is drawn
    uniformly inside the band. Background activity is 1/f^beta noise with
    beta drawn from ``beta_range`` per subject, plus a white noise floor.
    Oscillator phases and noise realizations differ between recordings.
    """

    n_subjects: int = 10
    n_channels: int = 4
    fs: float = 128.0
    duration_s: float = 60.0
    recordings_per_subject: int = 1
    band_amplitudes: dict = field(default_factory=lambda: {
        "delta": (3.0, 5.0),
        "theta": (3.0, 5.0),
        "alpha": (3.0, 6.0),
        "beta": (1.5, 3.0),
        "gamma": (0.5, 1.5),
    })
    pink_amplitude: tuple = (8.0, 10.0)
    beta_range: tuple = (0.8, 1.4)
    noise_floor: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 2:
            raise DatasetError("n_subjects must be at least 2")
        if self.n_channels < 1 or self.recordings_per_subject < 1:
            raise DatasetError("n_channels and recordings_per_subject must be >= 1")
        if not self.fs > 0:
            raise DatasetError("fs must be positive")
        if self.duration_s < GRID_BOUNDS[1]:
            raise DatasetError(
                f"duration_s must cover the longest grid segment ({GRID_BOUNDS[1]} s)")
        missing = set(SYNTH_BANDS) - set(self.band_amplitudes)
        if missing:
            raise DatasetError(f"band_amplitudes missing {sorted(missing)}")

    def to_dict(self) -> dict:
        return {
            "n_subjects": self.n_subjects, "n_channels": self.n_channels,
            "fs": self.fs, "duration_s": self.duration_s,
            "recordings_per_subject": self.recordings_per_subject,
            "band_amplitudes": {k: list(v) for k, v in self.band_amplitudes.items()},
            "pink_amplitude": list(self.pink_amplitude),
            "beta_range": list(self.beta_range),
            "noise_floor": self.noise_floor, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SynthSpec:
        d = dict(d)
        if "band_amplitudes" in d:
            d["band_amplitudes"] = {k: tuple(v) for k, v in d["band_amplitudes"].items()}
        for key in ("pink_amplitude", "beta_range"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def _pink_noise(rng: np.random.Generator, n: int, beta: float, fs: float) -> np.ndarray:
    """Unit-variance 1/f^beta noise by spectral shaping of white noise."""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    scale = np.ones_like(freqs)
    scale[1:] = freqs[1:] ** (-beta / 2.0)
    scale[0] = 0.0
    x = np.fft.irfft(spectrum * scale, n)
    sd = x.std()
    return x / sd if sd > 0 else x


def generate_synthetic_dataset(spec: SynthSpec) -> Dataset:
    """Draw a subject-separable EEG-like dataset; bit-identical for equal specs."""
    rng = np.random.default_rng(spec.seed)
    n = int(math.floor(spec.duration_s * spec.fs))
    t = np.arange(n) / spec.fs
    channels = tuple(f"ch{c:02d}" for c in range(spec.n_channels))
    bands = list(SYNTH_BANDS)

    recordings = []
    for s in range(spec.n_subjects):
        # subject-level parameters, fixed across that subject's recordings
        amps = np.array([rng.uniform(*spec.band_amplitudes[b], size=spec.n_channels)
                         for b in bands])                       # (bands, channels)
        freqs = np.array([rng.uniform(*SYNTH_BANDS[b], size=spec.n_channels)
                          for b in bands])
        beta = rng.uniform(*spec.beta_range)
        pink_amp = rng.uniform(*spec.pink_amplitude, size=spec.n_channels)
        sid = f"S{s + 1:02d}"
        for _ in range(spec.recordings_per_subject):
            x = np.empty((n, spec.n_channels))
            for c in range(spec.n_channels):
                phases = rng.uniform(0.0, 2.0 * np.pi, size=len(bands))
                osc = (amps[:, c, None]
                       * np.sin(2.0 * np.pi * freqs[:, c, None] * t + phases[:, None])).sum(0)
                x[:, c] = (osc + pink_amp[c] * _pink_noise(rng, n, beta, spec.fs)
                           + spec.noise_floor * rng.standard_normal(n))
            recordings.append(Recording(sid, channels, spec.fs, x, "rest"))
    return Dataset(f"synth-{spec.seed}", recordings)


# ---------------------------------------------------------------------------
# filtering


def _check_cutoff(fc: float, fs: float) -> None:
    if not 0.0 < fc < fs / 2.0:
        raise ValueError(f"cutoff {fc} Hz outside (0, fs/2) for fs={fs}")


def first_order_lowpass(fc: float, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """First-order Butterworth low-pass, bilinear transform with pre-warping.

    With ``K = tan(pi * fc / fs)``::

        b = [K, K] / (1 + K)
        a = [1, (K - 1) / (K + 1)]
    """
    _check_cutoff(fc, fs)
    k = math.tan(math.pi * fc / fs)
    return np.array([k, k]) / (1.0 + k), np.array([1.0, (k - 1.0) / (k + 1.0)])


def first_order_highpass(fc: float, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """First-order Butterworth high-pass; ``b = [1, -1] / (1 + K)``, same ``a`` as the low-pass."""
    _check_cutoff(fc, fs)
    k = math.tan(math.pi * fc / fs)
    return np.array([1.0, -1.0]) / (1.0 + k), np.array([1.0, (k - 1.0) / (k + 1.0)])


def bandpass_coefficients(fs: float, low_hz: float, high_hz: float):
    """Second-order (b, a) of the high-pass(low_hz) * low-pass(high_hz) cascade."""
    if not low_hz < high_hz:
        raise ValueError(f"low cutoff {low_hz} must be below high cutoff {high_hz}")
    bh, ah = first_order_highpass(low_hz, fs)
    bl, al = first_order_lowpass(high_hz, fs)
    return np.convolve(bh, bl), np.convolve(ah, al)


def bandpass_response(freqs, fs: float, low_hz: float, high_hz: float) -> np.ndarray:
    """Complex frequency response of the cascade at ``freqs`` (Hz)."""
    b, a = bandpass_coefficients(fs, low_hz, high_hz)
    z_inv = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / fs)
    return np.polyval(b[::-1], z_inv) / np.polyval(a[::-1], z_inv)


def bandpass_filter(signal, fs: float, low_hz: float = 3.0, high_hz: float = 40.0,
                    axis: int = 0) -> np.ndarray:
    """Causal forward bandpass filtering along ``axis``; output length equals input."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0 or x.shape[axis] < 2:
        raise ValueError("signal must contain at least 2 samples")
    b, a = bandpass_coefficients(fs, low_hz, high_hz)
    return lfilter(b, a, x, axis=axis)


def filter_recording(rec: Recording, low_hz: float = 3.0, high_hz: float = 40.0) -> Recording:
    return Recording(rec.subject_id, rec.channels, rec.fs,
                     bandpass_filter(rec.samples, rec.fs, low_hz, high_hz, axis=0),
                     rec.condition)


# ---------------------------------------------------------------------------
# segmentation


def default_duration_grid() -> list[float]:
    """The 19 segment durations (s) swept by default."""
    return list(DEFAULT_GRID)


def segment_length(duration_s: float, fs: float) -> int:
    # guard against 0.3 * 10 -> 2.9999999999999996 style truncation
    return int(math.floor(duration_s * fs + 1e-9))


def segment_recording(recording: Recording, duration_s: float) -> list[Segment]:
    """Split into consecutive non-overlapping windows starting at sample 0.

    The trailing remainder is dropped. A window longer than the recording
    yields an empty list and a logged warning.
    """
    if not duration_s > 0:
        raise ValueError("duration_s must be positive")
    length = segment_length(duration_s, recording.fs)
    if length < 2:
        raise ValueError(
            f"segment of {duration_s} s at {recording.fs} Hz has {length} samples; need >= 2")
    if length > recording.n_samples:
        logger.warning("duration %.3g s exceeds recording of %d samples (%s); no segments",
                       duration_s, recording.n_samples, recording.subject_id)
        return []
    count = recording.n_samples // length
    return [Segment(recording.subject_id, recording.fs, duration_s,
                    recording.samples[i * length:(i + 1) * length], i * length)
            for i in range(count)]
