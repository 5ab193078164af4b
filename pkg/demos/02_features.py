"""Compute the per-channel feature vector for a few segment lengths."""
import numpy as np

from eegseg.features import FEATURE_NAMES, channel_features, extract_vector
from eegseg.signal import SynthSpec, generate_synthetic_dataset, segment_recording

ds = generate_synthetic_dataset(SynthSpec(n_subjects=2, n_channels=1, duration_s=12, seed=1))
rec = ds.recordings[0]

for d in (0.5, 2.0, 10.0):
    seg = segment_recording(rec, d)[0]
    values = channel_features(seg.samples[:, 0], rec.fs).ravel()
    print(f"--- {d} s segment ({seg.samples.shape[0]} samples)")
    for name, v in zip(FEATURE_NAMES, values):
        print(f"  {name:<22} {v: .4f}")

# A full vector is channel-major; NaN marks features undefined at this length
vec = extract_vector(segment_recording(rec, 0.1)[0])
print("0.1 s vector:", len(vec.values), "values,", int(np.isnan(vec.values).sum()), "missing")
