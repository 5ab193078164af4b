"""Accuracy versus segment duration, and where the curve bends.

Writes sweep.csv and accuracy/derivative plots to ./demo_results.
"""
from pathlib import Path

from eegseg import report
from eegseg.classifiers import ClassifierSpec, Protocol
from eegseg.signal import SynthSpec, generate_synthetic_dataset
from eegseg.sweep import derivative_curve, detect_knee, normalize_curve, pooled_curve, run_sweep

ds = generate_synthetic_dataset(SynthSpec(n_subjects=6, duration_s=40, seed=3))
specs = [ClassifierSpec("knn", {"k": 5}), ClassifierSpec("gbt", {"n_trees": 20})]
curves = run_sweep(ds, specs=specs, protocol=Protocol(repeats=2), master_seed=3)

pooled = pooled_curve(curves)
slope = derivative_curve(pooled.durations, normalize_curve(pooled.mean_acc))
for d, acc, s in zip(pooled.durations, pooled.mean_acc, slope):
    print(f"  {d:>4} s  acc={acc:.3f}  d(norm acc)/dt={s: .3f}")
knee = detect_knee(pooled)
print("knee:", f"{knee.knee_duration} s" if knee.found else "none")

out = Path("demo_results")
out.mkdir(exist_ok=True)
report.write_sweep_csv(curves, out / "sweep.csv")
report.atomic_write(out / "accuracy.svg", report.accuracy_svg(curves))
report.atomic_write(out / "derivative.svg", report.derivative_svg(curves, knee))
print("wrote", out)
