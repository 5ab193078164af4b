"""k-nearest-neighbour identification by majority vote."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .base import LabeledSet, TrainedModel

# rows of queries scored per cdist call
_QUERY_BLOCK = 512


@dataclass(eq=False)
class KnnModel(TrainedModel):
    train_x: np.ndarray
    train_y: np.ndarray
    k: int

    kind = "knn"

    def predict(self, x) -> np.ndarray:
        x = self._check_input(x)
        out = np.empty(len(x), dtype=np.int64)
        for start in range(0, len(x), _QUERY_BLOCK):
            dist = cdist(x[start:start + _QUERY_BLOCK], self.train_x)
            out[start:start + _QUERY_BLOCK] = [self._vote(row) for row in dist]
        return out

    def _vote(self, dist: np.ndarray) -> int:
        # stable sort: equal distances resolved by training index
        nearest = np.argsort(dist, kind="stable")[:self.k]
        labels = self.train_y[nearest]
        votes = np.bincount(labels, minlength=self.n_classes)
        tied = np.flatnonzero(votes == votes.max())
        if len(tied) == 1:
            return int(tied[0])
        mean_dist = [dist[nearest[labels == c]].mean() for c in tied]
        # np.argmin returns the first minimum, i.e. the lowest class index
        return int(tied[int(np.argmin(mean_dist))])

    def params_dict(self) -> dict:
        return {"k": self.k, "train_x": self.train_x.tolist(),
                "train_y": self.train_y.tolist()}

    @classmethod
    def from_params(cls, n_classes, input_dim, p):
        return cls(n_classes=n_classes, input_dim=input_dim,
                   train_x=np.array(p["train_x"], dtype=np.float64).reshape(-1, input_dim),
                   train_y=np.array(p["train_y"], dtype=np.int64), k=int(p["k"]))


def train_knn(train: LabeledSet, k: int = 5) -> KnnModel:
    if not 1 <= k <= len(train):
        raise ValueError(f"k={k} outside [1, {len(train)}]")
    return KnnModel(n_classes=train.n_classes, input_dim=train.dim,
                    train_x=train.vectors.copy(), train_y=train.labels.copy(), k=k)
