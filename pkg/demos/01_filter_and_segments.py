"""Band-pass a synthetic recording and cut it into fixed-length segments.

Run from the repository root: python demos/01_filter_and_segments.py
"""
import numpy as np

from eegseg.signal import (Recording, SynthSpec, bandpass_response, default_duration_grid,
                           filter_recording, generate_synthetic_dataset, segment_recording)

ds = generate_synthetic_dataset(SynthSpec(n_subjects=3, n_channels=2, duration_s=20, seed=0))
rec = ds.recordings[0]
print(f"{ds.name}: {len(ds.recordings)} recordings, fs={rec.fs:g} Hz, {rec.n_samples} samples")

# first-order high-pass at 3 Hz followed by first-order low-pass at 40 Hz
for f in (1, 3, 10, 40, 60):
    gain = abs(bandpass_response([f], rec.fs, 3, 40)[0])
    print(f"  |H({f:>2} Hz)| = {gain:.3f}")

filtered = filter_recording(rec)
# a DC offset is removed once the high-pass transient has decayed (~0.2 s)
shifted = filter_recording(Recording(rec.subject_id, rec.channels, rec.fs, rec.samples + 50.0))
residual = np.abs(shifted.samples - filtered.samples)[int(rec.fs):].max()
print(f"+50 offset after filtering, t > 1 s: max residual {residual:.2e}")

# non-overlapping windows; the tail that does not fill a window is discarded
for d in default_duration_grid()[::4]:
    segs = segment_recording(filtered, d)
    print(f"  {d:>4} s -> {len(segs):>3} segments of {segs[0].samples.shape[0]} samples")
