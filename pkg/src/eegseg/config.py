"""Run configuration: one JSON document describing a complete sweep.

Example::

    {
      "synth": {"n_subjects": 10, "duration_s": 60, "seed": 1},
      "grid": [0.1, 0.2, 0.5, 1, 2, 5, 10],
      "features": {"entropy": {"m": 2, "r_factor": 0.2}},
      "classifiers": [{"kind": "knn", "params": {"k": 5}},
                      {"kind": "mlp", "params": {"hidden_sizes": [200, 120, 70]}},
                      {"kind": "gbt", "params": {"n_trees": 200}}],
      "protocol": {"repeats": 3, "train_fraction": 0.7},
      "band": [3, 40],
      "master_seed": 0,
      "output_dir": "results"
    }

Exactly one of ``"manifest"`` (path to a dataset manifest, relative paths
resolve against the config file) or ``"synth"`` must be present. Omitted
keys take the defaults below.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .classifiers import ClassifierSpec, Protocol
from .features import FeatureParams
from .signal import SynthSpec, default_duration_grid
from .sweep import default_classifiers

GRID_SANITY = (0.05, 60.0)
_KNOWN_KEYS = {"manifest", "synth", "grid", "features", "classifiers", "protocol",
               "band", "condition", "master_seed", "output_dir", "n_jobs", "toolkit_version"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    manifest: str | None = None
    synth: SynthSpec | None = None
    grid: tuple = field(default_factory=lambda: tuple(default_duration_grid()))
    features: FeatureParams = field(default_factory=FeatureParams)
    classifiers: tuple = field(default_factory=lambda: tuple(default_classifiers()))
    protocol: Protocol = field(default_factory=Protocol)
    band: tuple | None = (3.0, 40.0)
    condition: str | None = None  # None pools all conditions
    master_seed: int = 0
    output_dir: str = "results"
    n_jobs: int = 1

    def __post_init__(self):
        if (self.manifest is None) == (self.synth is None):
            raise ConfigError("config needs exactly one dataset source: 'manifest' or 'synth'")
        grid = tuple(float(d) for d in self.grid)
        if not grid:
            raise ConfigError("duration grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("duration grid must be strictly increasing")
        lo, hi = GRID_SANITY
        if grid[0] < lo or grid[-1] > hi:
            raise ConfigError(f"grid durations must lie within [{lo}, {hi}] s")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        if self.band is not None:
            object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")

    def to_dict(self) -> dict:
        d = {}
        if self.manifest is not None:
            d["manifest"] = self.manifest
        else:
            d["synth"] = self.synth.to_dict()
        d.update({
            "grid": list(self.grid),
            "features": self.features.to_dict(),
            "classifiers": [c.to_dict() for c in self.classifiers],
            "protocol": {"repeats": self.protocol.repeats,
                         "train_fraction": self.protocol.train_fraction},
            "band": None if self.band is None else list(self.band),
            "condition": self.condition,
            "master_seed": int(self.master_seed),
            "output_dir": self.output_dir,
            "n_jobs": self.n_jobs,
        })
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        unknown = set(d) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        try:
            if d.get("manifest") is not None:
                kw["manifest"] = str(d["manifest"])
            if d.get("synth") is not None:
                kw["synth"] = SynthSpec.from_dict(d["synth"])
            if "grid" in d:
                kw["grid"] = d["grid"]
            if "features" in d:
                kw["features"] = FeatureParams.from_dict(d["features"])
            if "classifiers" in d:
                kw["classifiers"] = [ClassifierSpec.from_dict(c) for c in d["classifiers"]]
            if "protocol" in d:
                kw["protocol"] = Protocol(**d["protocol"])
            for key in ("band", "condition", "output_dir"):
                if key in d:
                    kw[key] = d[key]
            if "master_seed" in d:
                kw["master_seed"] = int(d["master_seed"])
            if "n_jobs" in d:
                kw["n_jobs"] = int(d["n_jobs"])
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc


def emit_config(config: RunConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.from_dict(doc)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    config = parse_config(text)
    if config.manifest is not None and not Path(config.manifest).is_absolute():
        config = replace(config, manifest=str((path.parent / config.manifest).resolve()))
    return config
