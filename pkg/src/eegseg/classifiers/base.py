"""Labeled feature sets, the shared model contract, and model files.

A model file is JSON::

    {"format": "eegseg-model", "version": 1, "kind": "knn" | "mlp" | "gbt",
     "n_classes": int, "input_dim": int, "params": {...kind specific...}}

It exists for reproducibility audits (it records every fitted parameter),
not as a serving format.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MODEL_FORMAT = "eegseg-model"
MODEL_VERSION = 1


@dataclass(eq=False)
class LabeledSet:
    """Standardized, imputed vectors with integer class labels."""

    vectors: np.ndarray
    labels: np.ndarray
    label_names: tuple = ()
    standardization: tuple | None = None  # (mean, std) learned on the training fold
    n_classes: int = field(default=0)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.vectors.ndim != 2 or len(self.vectors) != len(self.labels):
            raise ValueError("vectors must be (n, d) with one label per row")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("vectors contain missing or non-finite values")
        if not self.n_classes:
            self.n_classes = len(self.label_names) or int(self.labels.max()) + 1
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(eq=False)
class TrainedModel:
    n_classes: int
    input_dim: int

    kind = "base"

    def predict(self, x) -> np.ndarray:
        raise NotImplementedError

    def _check_input(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.input_dim:
            raise ValueError(f"dimension mismatch: model expects {self.input_dim} "
                             f"features, got {x.shape[1]}")
        return x

    def params_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"format": MODEL_FORMAT, "version": MODEL_VERSION, "kind": self.kind,
                "n_classes": self.n_classes, "input_dim": self.input_dim,
                "params": self.params_dict()}


def evaluate(model: TrainedModel, test: LabeledSet) -> float:
    """Top-1 accuracy of ``model`` on ``test``."""
    if len(test) == 0:
        raise ValueError("empty test set")
    if test.dim != model.input_dim:
        raise ValueError(f"dimension mismatch: model expects {model.input_dim} "
                         f"features, test set has {test.dim}")
    return float(np.mean(model.predict(test.vectors) == test.labels))


def save_model(model: TrainedModel, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(model.to_dict()))
    os.replace(tmp, path)


def load_model(path) -> TrainedModel:
    from .gbt import GbtModel
    from .knn import KnnModel
    from .mlp import MlpModel

    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not an {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')}")
    kinds = {"knn": KnnModel, "mlp": MlpModel, "gbt": GbtModel}
    if doc["kind"] not in kinds:
        raise ValueError(f"{path}: unknown model kind {doc['kind']!r}")
    return kinds[doc["kind"]].from_params(doc["n_classes"], doc["input_dim"], doc["params"])
