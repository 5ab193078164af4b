"""Command-line entry points.

    eegseg synth   --config run.json [--out DIR] [--seed N]
    eegseg sweep   --config run.json [--out DIR] [--seed N]
    eegseg plot    sweep.csv [--reference ref.csv] [--out DIR]
    eegseg compare sweep.csv ref.csv [--classifier NAME] [--out DIR]

Exit status: 0 success, 1 usage or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .signal import DatasetError, generate_synthetic_dataset, load_dataset, write_dataset
from .sweep import compare_to_reference, detect_knee, pooled_curve, run_sweep
from . import report

logger = logging.getLogger("eegseg")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def cmd_synth(config: RunConfig, out=None, seed: int | None = None) -> Path:
    """Write the configured synthetic dataset; returns the manifest path."""
    if config.synth is None:
        raise UsageError("synth needs a config with a 'synth' section")
    spec = config.synth if seed is None else replace(config.synth, seed=seed)
    return write_dataset(generate_synthetic_dataset(spec), _out_dir(out or config.output_dir))


def _load_source(config: RunConfig):
    if config.synth is not None:
        return generate_synthetic_dataset(config.synth)
    return load_dataset(config.manifest).select(config.condition)


def _knees(curves) -> dict:
    knees = {}
    for c in curves:
        if len(c) < 3:
            logger.warning("%s: %d durations, too few to locate a knee", c.classifier, len(c))
            continue
        knees[c.classifier] = detect_knee(c)
    return knees


def _write_plots(curves, out: Path, knee=None, reference=None) -> list[Path]:
    written = []
    if all(len(c) >= 2 for c in curves):
        path = out / "accuracy.svg"
        report.atomic_write(path, report.accuracy_svg(curves))
        written.append(path)
    if all(len(c) >= 3 for c in curves):
        path = out / "derivative.svg"
        report.atomic_write(path, report.derivative_svg(curves, knee))
        written.append(path)
    if reference is not None:
        path = out / "comparison.svg"
        report.atomic_write(path, report.comparison_svg(pooled_curve(curves), *reference))
        written.append(path)
    return written


def cmd_sweep(config: RunConfig, out=None, seed: int | None = None) -> Path:
    """Run the sweep and write sweep.csv, knee.csv, knee.txt, run_manifest.json and SVGs."""
    if seed is not None:
        config = replace(config, master_seed=seed)
    out = _out_dir(out or config.output_dir)
    dataset = _load_source(config)
    curves = run_sweep(dataset, grid=config.grid, specs=config.classifiers,
                       protocol=config.protocol, feature_params=config.features,
                       master_seed=config.master_seed, band=config.band, n_jobs=config.n_jobs)
    if not len(curves[0]):
        raise DataError("no duration in the grid produced usable segments")
    report.write_sweep_csv(curves, out / "sweep.csv")
    knees = _knees(curves + [pooled_curve(curves)])
    report.atomic_write(out / "knee.csv", report.knee_csv_text(knees))
    report.atomic_write(out / "knee.txt", report.knee_report_text(knees, dataset.name))
    manifest = config.to_dict()
    manifest["toolkit_version"] = __version__
    report.atomic_write(out / "run_manifest.json", json.dumps(manifest, indent=2, sort_keys=True)
                        + "\n")
    _write_plots(curves, out, knees.get("pooled"))
    return out


def cmd_plot(results_csv, out=".", reference_csv=None) -> list[Path]:
    curves = report.read_sweep_csv(results_csv)
    if not curves:
        raise DataError(f"{results_csv}: no curves")
    short = [c.classifier for c in curves if len(c) < 2]
    if short:
        raise DataError("need ≥ 2 points to plot a curve")
    reference = report.read_reference_csv(reference_csv) if reference_csv else None
    pooled = pooled_curve(curves)
    knee = detect_knee(pooled) if len(pooled) >= 3 else None
    return _write_plots(curves, _out_dir(out), knee, reference)


def cmd_compare(results_csv, reference_csv, classifier: str | None = None) -> dict:
    """Pearson (r, p) between a sweep curve (pooled by default) and a reference curve."""
    curves = report.read_sweep_csv(results_csv)
    if not curves:
        raise DataError(f"{results_csv}: no curves")
    if classifier is None:
        curve = pooled_curve(curves)
    else:
        match = [c for c in curves if c.classifier == classifier]
        if not match:
            raise UsageError(f"classifier {classifier!r} not in {results_csv}; "
                             f"have {[c.classifier for c in curves]}")
        curve = match[0]
    rx, ry = report.read_reference_csv(reference_csv)
    r, p = compare_to_reference(curve, rx, ry)
    return {"classifier": curve.classifier, "r": r, "p": p}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eegseg", description="EEG segment-duration identification study")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (("synth", "write a synthetic dataset"),
                            ("sweep", "run the duration sweep")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="run config (JSON)")
        p.add_argument("--out", help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=_u64, help="override the seed")

    p = sub.add_parser("plot", help="render SVG plots from a sweep CSV")
    p.add_argument("results", help="sweep CSV")
    p.add_argument("--reference", help="reference curve CSV for an overlay plot")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("compare", help="correlate a sweep curve with a reference curve")
    p.add_argument("results", help="sweep CSV")
    p.add_argument("reference", help="reference curve CSV (duration_s, value)")
    p.add_argument("--classifier", help="curve to compare (default: pooled mean)")
    p.add_argument("--out", help="also write compare.txt here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "synth":
            path = cmd_synth(load_config(args.config), args.out, args.seed)
            print(f"wrote {path}")
        elif args.command == "sweep":
            out = cmd_sweep(load_config(args.config), args.out, args.seed)
            print(f"wrote results to {out}")
        elif args.command == "plot":
            for path in cmd_plot(args.results, args.out, args.reference):
                print(f"wrote {path}")
        else:
            res = cmd_compare(args.results, args.reference, args.classifier)
            text = f"classifier={res['classifier']} r={res['r']:.6f} p={res['p']:.6g}\n"
            sys.stdout.write(text)
            if args.out:
                report.atomic_write(_out_dir(args.out) / "compare.txt", text)
    except (UsageError, ConfigError) as exc:
        print(f"eegseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DatasetError, report.SchemaError, ValueError, OSError) as exc:
        print(f"eegseg: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
