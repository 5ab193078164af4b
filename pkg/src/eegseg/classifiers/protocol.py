"""Repeated stratified hold-out evaluation of a classifier on a feature matrix."""
from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np

from .base import LabeledSet, TrainedModel, evaluate
from .gbt import GbtParams, train_gbt
from .knn import train_knn
from .mlp import MlpConfig, train_mlp

KINDS = ("knn", "mlp", "gbt")


@dataclass(frozen=True)
class ClassifierSpec:
    """Which classifier to train and with what parameters.

    ``params`` keys: knn -> ``k``; mlp -> :class:`MlpConfig` fields;
    gbt -> :class:`GbtParams` fields. Seeds are filled in per repeat.
    """

    kind: str
    params: dict = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        params = dict(self.params)
        if "hidden_sizes" in params:
            params["hidden_sizes"] = tuple(int(h) for h in params["hidden_sizes"])
        object.__setattr__(self, "params", params)

    @property
    def label(self) -> str:
        return self.name or self.kind

    def train(self, train: LabeledSet, seed: int) -> TrainedModel:
        if self.kind == "knn":
            return train_knn(train, int(self.params.get("k", 5)))
        if self.kind == "mlp":
            cfg = MlpConfig(**{**self.params, "seed": seed})
            return train_mlp(train, cfg)
        return train_gbt(train, GbtParams(**{**self.params, "seed": seed}))

    def to_dict(self) -> dict:
        params = {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()}
        d = {"kind": self.kind, "params": params}
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ClassifierSpec:
        return cls(d["kind"], dict(d.get("params", {})), d.get("name"))


@dataclass(frozen=True)
class Protocol:
    repeats: int = 3
    train_fraction: float = 0.7

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(eq=False)
class FeatureSet:
    """Raw feature rows (NaN = missing) with integer subject labels."""

    x: np.ndarray
    labels: np.ndarray
    label_names: tuple

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        x[~np.isfinite(x)] = np.nan
        self.x = x
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.label_names = tuple(self.label_names)

    @classmethod
    def from_subjects(cls, x, subject_ids, label_names=None) -> FeatureSet:
        names = tuple(label_names or dict.fromkeys(subject_ids))
        lookup = {s: i for i, s in enumerate(names)}
        return cls(x, np.array([lookup[s] for s in subject_ids], dtype=np.int64), names)


@dataclass(frozen=True)
class EvalReport:
    accuracies: tuple

    @property
    def accuracy_mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def accuracy_std(self) -> float:
        """Sample standard deviation (n - 1) across repeats; 0 for a single repeat."""
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))


def derive_seed(master_seed: int, *keys) -> int:
    """Deterministic 63-bit seed from a master seed and integer/string keys."""
    ints = [zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in keys]
    seq = np.random.SeedSequence([int(master_seed)] + ints)
    return int(seq.generate_state(1, dtype=np.uint64)[0]) >> 1


def stratified_split(labels: np.ndarray, train_fraction: float, rng: np.random.Generator):
    """Per-class shuffled split; every class keeps at least one row in each fold."""
    train_idx, test_idx = [], []
    for c in np.unique(labels):
        rows = np.flatnonzero(labels == c)
        if len(rows) < 2:
            raise ValueError(f"class {c} has {len(rows)} segment(s); need >= 2 to stratify")
        rows = rng.permutation(rows)
        n_train = min(max(int(round(train_fraction * len(rows))), 1), len(rows) - 1)
        train_idx.append(rows[:n_train])
        test_idx.append(rows[n_train:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def prepare_fold(features: FeatureSet, train_idx, test_idx):
    """Impute missing values with training means, then z-score with training statistics.

    Only rows in ``train_idx`` influence the imputation and scaling.
    """
    x_train = features.x[train_idx]
    x_test = features.x[test_idx]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
        fill = np.nanmean(x_train, axis=0)
    fill = np.where(np.isfinite(fill), fill, 0.0)
    x_train = np.where(np.isnan(x_train), fill, x_train)
    x_test = np.where(np.isnan(x_test), fill, x_test)
    mean = x_train.mean(axis=0)
    std = x_train.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    n_classes = len(features.label_names)
    train = LabeledSet((x_train - mean) / std, features.labels[train_idx],
                       features.label_names, (mean, std), n_classes)
    test = LabeledSet((x_test - mean) / std, features.labels[test_idx],
                      features.label_names, (mean, std), n_classes)
    return train, test


def repeated_eval(features: FeatureSet, spec: ClassifierSpec, protocol: Protocol | None = None,
                  master_seed: int = 0, seed_keys: tuple = ()) -> EvalReport:
    """Re-split, re-impute, re-standardize, retrain and score ``protocol.repeats`` times."""
    protocol = protocol or Protocol()
    accs = []
    for rep in range(protocol.repeats):
        seed = derive_seed(master_seed, *seed_keys, spec.label, rep)
        rng = np.random.default_rng(seed)
        train_idx, test_idx = stratified_split(features.labels, protocol.train_fraction, rng)
        train, test = prepare_fold(features, train_idx, test_idx)
        model = spec.train(train, seed)
        accs.append(evaluate(model, test))
    return EvalReport(tuple(accs))
