"""Subject identification at one segment length with the three classifiers."""
from eegseg.classifiers import ClassifierSpec, FeatureSet, Protocol, repeated_eval
from eegseg.features import feature_matrix
from eegseg.signal import (SynthSpec, filter_recording, generate_synthetic_dataset,
                           segment_recording)

ds = generate_synthetic_dataset(SynthSpec(n_subjects=6, n_channels=2, duration_s=30, seed=2))
segments = [s for rec in ds.recordings for s in segment_recording(filter_recording(rec), 1.0)]
x = feature_matrix(segments)
names = sorted({s.subject_id for s in segments})
labels = [names.index(s.subject_id) for s in segments]
data = FeatureSet(x, labels, names)
print(f"{x.shape[0]} segments x {x.shape[1]} features, {len(names)} subjects")

specs = [ClassifierSpec("knn", {"k": 5}),
         ClassifierSpec("mlp", {"hidden_sizes": [32], "epochs": 100}),
         ClassifierSpec("gbt", {"n_trees": 30})]
for spec in specs:
    report = repeated_eval(data, spec, Protocol(repeats=3), master_seed=0)
    print(f"  {spec.kind}: {report.accuracy_mean:.3f} +/- {report.accuracy_std:.3f}")
