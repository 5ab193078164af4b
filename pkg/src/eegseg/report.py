"""Result files: sweep/knee/feature CSVs, reference curves, and SVG plots.

CSV schemas
-----------
sweep:      ``dataset,classifier,duration_s,acc_mean,acc_std,repeat_accs`` where
            ``repeat_accs`` is a JSON list of per-repeat accuracies.
knee:       ``classifier,knee_duration,confidence``; empty knee_duration = no knee.
features:   ``subject_id,duration_s,f000,...,fNNN``; missing values are empty cells.
reference:  two columns ``duration_s,value``, header optional.

Floats are written with ``repr`` so files round-trip exactly and repeated
runs are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .sweep import AccuracyCurve, KneeResult

SWEEP_COLUMNS = ("dataset", "classifier", "duration_s", "acc_mean", "acc_std", "repeat_accs")
KNEE_COLUMNS = ("classifier", "knee_duration", "confidence")


class SchemaError(ValueError):
    pass


def atomic_write(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial output."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(v) -> str:
    return repr(float(v))


def _read_rows(path, expected_header) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != tuple(expected_header):
            raise SchemaError(f"{path}: expected header {','.join(expected_header)}")
        return [dict(zip(header, row)) for row in reader if row]


# ---------------------------------------------------------------------------
# sweep results


def sweep_csv_text(curves) -> str:
    rows = []
    for c in curves:
        for i, d in enumerate(c.durations):
            reps = list(c.repeat_accs[i]) if c.repeat_accs else []
            rows.append([c.dataset, c.classifier, _num(d), _num(c.mean_acc[i]),
                         _num(c.std_acc[i]), json.dumps([float(a) for a in reps])])
    return _csv_text(SWEEP_COLUMNS, rows)


def write_sweep_csv(curves, path) -> None:
    atomic_write(path, sweep_csv_text(curves))


def read_sweep_csv(path) -> list[AccuracyCurve]:
    """Curves in file order, one per (dataset, classifier) pair."""
    groups: dict = {}
    try:
        for row in _read_rows(path, SWEEP_COLUMNS):
            key = (row["dataset"], row["classifier"])
            groups.setdefault(key, []).append(
                (float(row["duration_s"]), float(row["acc_mean"]), float(row["acc_std"]),
                 tuple(json.loads(row["repeat_accs"]))))
    except (ValueError, KeyError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{path}: malformed sweep row: {exc}") from exc
    curves = []
    for (dataset, clf), pts in groups.items():
        pts.sort(key=lambda p: p[0])
        curves.append(AccuracyCurve([p[0] for p in pts], [p[1] for p in pts],
                                    [p[2] for p in pts], clf, dataset,
                                    tuple(p[3] for p in pts)))
    return curves


# ---------------------------------------------------------------------------
# knees


def knee_csv_text(knees: dict) -> str:
    rows = [[name, "" if k.knee_duration is None else _num(k.knee_duration), _num(k.confidence)]
            for name, k in knees.items()]
    return _csv_text(KNEE_COLUMNS, rows)


def knee_report_text(knees: dict, dataset: str) -> str:
    lines = [f"Knee points for dataset {dataset}", ""]
    for name, k in knees.items():
        where = "no knee" if k.knee_duration is None else f"{k.knee_duration:g} s"
        lines.append(f"{name:>12}: {where} (max difference {k.confidence:.4f})")
    return "\n".join(lines) + "\n"


def read_knee_csv(path) -> dict:
    out = {}
    for row in _read_rows(path, KNEE_COLUMNS):
        knee = float(row["knee_duration"]) if row["knee_duration"] else None
        out[row["classifier"]] = (knee, float(row["confidence"]))
    return out


# ---------------------------------------------------------------------------
# features and reference curves


def write_feature_csv(path, subject_ids, duration_s: float, matrix) -> None:
    matrix = np.asarray(matrix, dtype=float)
    header = ["subject_id", "duration_s"] + [f"f{i:03d}" for i in range(matrix.shape[1])]
    rows = [[sid, _num(duration_s)] + ["" if np.isnan(v) else _num(v) for v in row]
            for sid, row in zip(subject_ids, matrix)]
    atomic_write(path, _csv_text(header, rows))


def read_feature_csv(path):
    """Returns ``(subject_ids, durations, matrix)`` with NaN for empty cells."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["subject_id", "duration_s"]:
            raise SchemaError(f"{path}: expected header subject_id,duration_s,f000,...")
        expected = [f"f{i:03d}" for i in range(len(header) - 2)]
        if header[2:] != expected:
            raise SchemaError(f"{path}: feature columns must be f000..f{len(expected) - 1:03d}")
        sids, durs, rows = [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}: row has {len(row)} cells, expected {len(header)}")
            sids.append(row[0])
            durs.append(float(row[1]))
            rows.append([float(v) if v != "" else np.nan for v in row[2:]])
    return sids, np.array(durs), np.array(rows, dtype=float).reshape(len(rows), len(header) - 2)


def read_reference_csv(path):
    """Two-column (duration_s, value) curve; a non-numeric first line is taken as a header."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise SchemaError(f"{path}:{lineno}: expected 2 columns")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    continue
                raise SchemaError(f"{path}:{lineno}: non-numeric value") from None
            xs.append(x)
            ys.append(y)
    if len(xs) < 2:
        raise SchemaError(f"{path}: reference curve needs at least 2 points")
    order = np.argsort(xs, kind="stable")
    return np.array(xs)[order], np.array(ys)[order]


# ---------------------------------------------------------------------------
# SVG


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(float(t), 10))
        t += step
    return ticks


def line_plot_svg(series, title: str, xlabel: str, ylabel: str, vlines=(),
                  width: int = 640, height: int = 400) -> str:
    """Render ``series`` = [(label, x, y), ...] as a standalone SVG line chart.

    ``vlines`` = [(x, label), ...] draws dashed vertical markers.
    """
    series = [(lbl, np.asarray(x, float), np.asarray(y, float)) for lbl, x, y in series]
    if not series or any(len(x) < 2 for _, x, _ in series):
        raise ValueError("need ≥ 2 points to plot a curve")
    left, right, top, bottom = 70, 150, 40, 55
    pw, ph = width - left - right, height - top - bottom
    all_x = np.concatenate([x for _, x, _ in series])
    all_y = np.concatenate([y for _, _, y in series])
    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
           f'{escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{top + ph}" x2="{px:.2f}" y2="{top + ph + 5}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        py = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<line x1="{left}" y1="{py:.2f}" x2="{left + pw}" y2="{py:.2f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.2f})">{escape(ylabel)}</text>')
    for xv, label in vlines:
        px = sx(xv)
        out.append(f'<line x1="{px:.2f}" y1="{top}" x2="{px:.2f}" y2="{top + ph}" '
                   f'stroke="black" stroke-dasharray="5,4"/>')
        out.append(f'<text x="{px + 4:.2f}" y="{top + 14}">{escape(label)}</text>')
    for i, (label, x, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for a, b in zip(x, y):
            out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{color}"/>')
        ly = top + 10 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def accuracy_svg(curves) -> str:
    """Min-max normalized accuracy against segment duration, one line per classifier.

    A constant curve cannot be normalized and is drawn unscaled.
    """
    from .sweep import normalize_curve

    series = []
    for c in curves:
        try:
            y = normalize_curve(c.mean_acc)
        except ValueError:
            if len(c) < 2:
                raise ValueError("need ≥ 2 points to plot a curve") from None
            y = c.mean_acc
        series.append((c.classifier, c.durations, y))
    return line_plot_svg(series, "Normalized accuracy vs segment duration",
                         "segment duration (s)", "normalized accuracy")


def derivative_svg(curves, knee: KneeResult | None = None) -> str:
    from .sweep import derivative_curve, normalize_curve

    series = []
    for c in curves:
        try:
            y = normalize_curve(c.mean_acc)
        except ValueError:
            y = np.zeros(len(c))
        series.append((c.classifier, c.durations, derivative_curve(c.durations, y)))
    marks = [] if knee is None or not knee.found else [(knee.knee_duration,
                                                       f"knee {knee.knee_duration:g} s")]
    return line_plot_svg(series, "Derivative of normalized accuracy",
                         "segment duration (s)", "d(accuracy)/d(duration) per s", marks)


def comparison_svg(curve: AccuracyCurve, ref_x, ref_y, ref_label: str = "reference") -> str:
    return line_plot_svg([(curve.classifier, curve.durations, curve.mean_acc),
                          (ref_label, ref_x, ref_y)],
                         "Accuracy curve vs reference", "segment duration (s)", "accuracy")
