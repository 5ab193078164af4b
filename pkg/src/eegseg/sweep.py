"""Duration sweep and accuracy-curve analysis (normalization, derivative, knee, correlation)."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .classifiers import ClassifierSpec, FeatureSet, Protocol, repeated_eval
from .features import FeatureParams, feature_matrix
from .signal import Dataset, default_duration_grid, filter_recording, segment_recording

logger = logging.getLogger(__name__)

# difference-curve values at or below this count as "no knee"
KNEE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class AccuracyCurve:
    durations: np.ndarray
    mean_acc: np.ndarray
    std_acc: np.ndarray
    classifier: str
    dataset: str
    repeat_accs: tuple = ()

    def __post_init__(self):
        for name in ("durations", "mean_acc", "std_acc"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if not len(self.durations) == len(self.mean_acc) == len(self.std_acc):
            raise ValueError("curve arrays must have equal length")
        if np.any(np.diff(self.durations) <= 0):
            raise ValueError("durations must be strictly increasing")

    def __len__(self) -> int:
        return len(self.durations)

    def __eq__(self, other):
        if not isinstance(other, AccuracyCurve):
            return NotImplemented
        return (self.classifier == other.classifier and self.dataset == other.dataset
                and np.array_equal(self.durations, other.durations)
                and np.array_equal(self.mean_acc, other.mean_acc)
                and np.array_equal(self.std_acc, other.std_acc)
                and self.repeat_accs == other.repeat_accs)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class KneeResult:
    knee_duration: float | None  # None when the curve has no knee
    difference_curve: np.ndarray = field(repr=False)
    confidence: float

    @property
    def found(self) -> bool:
        return self.knee_duration is not None


def default_classifiers() -> list[ClassifierSpec]:
    return [ClassifierSpec("mlp"), ClassifierSpec("knn", {"k": 5}), ClassifierSpec("gbt")]


# ---------------------------------------------------------------------------
# sweep


def _duration_features(dataset: Dataset, duration: float, params: FeatureParams):
    segments = []
    for rec in dataset.recordings:
        segments.extend(segment_recording(rec, duration))
    if not segments:
        return None
    counts = {s: 0 for s in dataset.subjects}
    for seg in segments:
        counts[seg.subject_id] += 1
    short = [s for s, c in counts.items() if c < 2]
    if short:
        logger.warning("duration %.3g s: subjects %s have < 2 segments; duration dropped",
                       duration, short)
        return None
    x = feature_matrix(segments, params)
    return FeatureSet.from_subjects(x, [s.subject_id for s in segments], dataset.subjects)


def _run_duration(args):
    dataset, index, duration, specs, protocol, params, master_seed = args
    features = _duration_features(dataset, duration, params)
    if features is None:
        return index, None
    reports = [repeated_eval(features, spec, protocol, master_seed, seed_keys=(index,))
               for spec in specs]
    return index, reports


def run_sweep(dataset: Dataset, grid=None, specs=None, protocol: Protocol | None = None,
              feature_params: FeatureParams | None = None, master_seed: int = 0,
              band: tuple | None = (3.0, 40.0), n_jobs: int = 1) -> list[AccuracyCurve]:
    """Segment, featurize and evaluate every classifier at every duration.

    Returns one curve per classifier spec. Durations without usable segments
    are dropped with a warning. Seeds depend only on (master_seed, duration
    index, classifier label, repeat), so parallel and serial runs agree.
    """
    grid = list(default_duration_grid() if grid is None else grid)
    if not grid:
        raise ValueError("empty duration grid")
    specs = list(default_classifiers() if specs is None else specs)
    protocol = protocol or Protocol()
    feature_params = feature_params or FeatureParams()
    if band is not None:
        dataset = Dataset(dataset.name, [filter_recording(r, *band) for r in dataset.recordings])

    tasks = [(dataset, i, d, specs, protocol, feature_params, master_seed)
             for i, d in enumerate(grid)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = dict(pool.map(_run_duration, tasks))
    else:
        results = dict(map(_run_duration, tasks))

    kept = [i for i in sorted(results) if results[i] is not None]
    for i in sorted(results):
        if results[i] is None:
            logger.warning("duration %.3g s produced no usable segments; dropped", grid[i])
    curves = []
    for j, spec in enumerate(specs):
        reps = [results[i][j] for i in kept]
        curves.append(AccuracyCurve(
            durations=[grid[i] for i in kept],
            mean_acc=[r.accuracy_mean for r in reps],
            std_acc=[r.accuracy_std for r in reps],
            classifier=spec.label, dataset=dataset.name,
            repeat_accs=tuple(r.accuracies for r in reps)))
    return curves


def pooled_curve(curves, name: str = "pooled") -> AccuracyCurve:
    """Mean accuracy across classifier curves on their shared grid."""
    curves = list(curves)
    shared = sorted(set.intersection(*(set(c.durations.tolist()) for c in curves)))
    rows = [[c.mean_acc[c.durations.tolist().index(d)] for d in shared] for c in curves]
    acc = np.mean(rows, axis=0)
    spread = np.std(rows, axis=0, ddof=1) if len(curves) > 1 else np.zeros(len(shared))
    return AccuracyCurve(shared, acc, spread, name, curves[0].dataset)


# ---------------------------------------------------------------------------
# analysis


def normalize_curve(curve):
    """Min-max rescale accuracies to [0, 1].

    Accepts an :class:`AccuracyCurve` (returns one, std scaled alongside) or
    a plain sequence of values (returns an array).
    """
    y = curve.mean_acc if isinstance(curve, AccuracyCurve) else np.asarray(curve, dtype=float)
    if len(y) < 2:
        raise ValueError("need at least 2 points to normalize")
    lo, hi = y.min(), y.max()
    if hi == lo:
        raise ValueError("degenerate normalization: constant curve")
    out = (y - lo) / (hi - lo)
    if not isinstance(curve, AccuracyCurve):
        return out
    return AccuracyCurve(curve.durations, out, curve.std_acc / (hi - lo),
                         curve.classifier, curve.dataset, curve.repeat_accs)


def derivative_curve(durations, values=None) -> np.ndarray:
    """Central differences on a non-uniform grid, one-sided at the two ends.

    Interior: ``(y[i+1] - y[i-1]) / (x[i+1] - x[i-1])``.
    """
    x, y = _xy(durations, values)
    if len(x) < 3:
        raise ValueError("need at least 3 points for a derivative")
    d = np.empty_like(y)
    d[1:-1] = (y[2:] - y[:-2]) / (x[2:] - x[:-2])
    d[0] = (y[1] - y[0]) / (x[1] - x[0])
    d[-1] = (y[-1] - y[-2]) / (x[-1] - x[-2])
    return d


def _xy(durations, values):
    if isinstance(durations, AccuracyCurve):
        return durations.durations, durations.mean_acc
    x = np.asarray(durations, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape:
        raise ValueError("durations and values differ in length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("durations must be strictly increasing")
    return x, y


def detect_knee(durations, values=None) -> KneeResult:
    """Kneedle for concave increasing curves.

    Both axes are min-max normalized; the knee is the grid point maximizing
    ``y_norm - x_norm`` (earliest one on ties). A maximum at or below zero,
    as for straight or convex curves, is reported as no knee.
    """
    x, y = _xy(durations, values)
    if len(x) < 3:
        raise ValueError("need at least 3 points to locate a knee")
    xn = (x - x[0]) / (x[-1] - x[0])
    span = y.max() - y.min()
    yn = (y - y.min()) / span if span > 0 else np.zeros_like(y)
    diff = yn - xn
    best = int(np.argmax(diff))
    conf = float(diff[best])
    knee = float(x[best]) if conf > KNEE_EPS else None
    return KneeResult(knee, diff, conf)


def plateau_variation(curve: AccuracyCurve, knee_duration: float) -> float:
    """Range (max - min) of accuracy over the durations strictly after the knee."""
    after = curve.mean_acc[curve.durations > knee_duration]
    return float(after.max() - after.min()) if len(after) else 0.0


def pearson_correlation(a, b) -> tuple[float, float]:
    """Sample Pearson r and its two-tailed p-value from Student's t with n - 2 dof."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D and of equal length")
    n = len(a)
    if n < 3:
        raise ValueError("need at least 3 points")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = math.sqrt(float(da @ da)), math.sqrt(float(db @ db))
    if sa == 0 or sb == 0:
        raise ValueError("constant input has no correlation")
    r = float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, float(2.0 * stats.t.sf(abs(t), n - 2))


def compare_to_reference(curve, reference_durations, reference_values) -> tuple[float, float]:
    """Pearson correlation after linear interpolation of the reference onto the curve grid.

    Only curve points inside the reference's duration range take part.
    """
    x, y = _xy(curve, None) if isinstance(curve, AccuracyCurve) else _xy(*curve)
    rx, ry = _xy(reference_durations, reference_values)
    inside = (x >= rx[0]) & (x <= rx[-1])
    if not inside.any():
        raise ValueError("curve and reference durations do not overlap")
    return pearson_correlation(y[inside], np.interp(x[inside], rx, ry))
