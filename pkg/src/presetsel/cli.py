"""Command-line surface tying ingestion, training, selection, and replay together.

Subcommands: extract, build-dataset, train, featsel, predict, select,
simulate, evaluate.  A line-oriented ``key = value`` config file can supply
defaults; explicit flags always win.  Exit codes: 0 success, 2 usage error,
3 data error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

from .dataset import (
    DatasetFormatError,
    TranscodeError,
    assemble_dataset,
    load_dataset,
    save_dataset,
    split_dataset,
)
from .features import DEFAULT_CODEBOOK, FEATURE_NAMES, extract_features, load_codebook
from .featselect import (
    cross_preset_indicator,
    feature_importance,
    retrain_with_selected,
    write_indicator_csv,
)
from .presets import PRESETS
from .regression import (
    BundleFormatError,
    FitError,
    evaluate_bundle,
    load_bundle,
    save_bundle,
    train_all_presets,
)
from .reports import (
    FEATSEL_REPORT_HEADER,
    TRAIN_REPORT_HEADER,
    featsel_report_rows,
    format_aligned,
    metrics_report_rows,
    train_report_rows,
    write_csv,
)
from .selector import (
    DECISION_HEADER,
    compute_budget,
    decision_csv_row,
    predict_all_presets,
    select_preset,
)
from .simulate import GroundTruthError, load_features_csv, load_ground_truth, simulate
from .stats import StatsParseError, parse_chunk_stats

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4

_DATA_ERRORS = (
    StatsParseError,
    DatasetFormatError,
    BundleFormatError,
    GroundTruthError,
    TranscodeError,
    FitError,
    ValueError,
)


@dataclass
class RunConfig:
    """Defaults shared by the subcommands; overridable per-key via config file."""

    dataset: str | None = None
    bundle: str | None = None
    codebook: str | None = None
    chunk_duration: float = 4.0
    overhead: float = 0.021
    margin: float = 1.0
    seed: int = 0
    k_folds: int = 5

    def validate(self) -> None:
        if self.chunk_duration <= 0:
            raise ValueError(f"chunk_duration must be positive, got {self.chunk_duration}")
        if self.overhead < 0:
            raise ValueError(f"overhead must be >= 0, got {self.overhead}")
        if self.margin <= 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        if self.k_folds < 2:
            raise ValueError(f"k_folds must be >= 2, got {self.k_folds}")


_CONFIG_TYPES = {f.name: f.type for f in fields(RunConfig)}


def load_run_config(path: str | Path) -> RunConfig:
    """Parse ``key = value`` lines; blank lines and # comments are ignored."""
    cfg = RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            if key not in _CONFIG_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in ("chunk_duration", "overhead", "margin"):
                cfg.__setattr__(key, float(value))
            elif key in ("seed", "k_folds"):
                cfg.__setattr__(key, int(value))
            else:
                cfg.__setattr__(key, value)
    cfg.validate()
    return cfg


def _resolve_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    # explicit flags (parsed as None when absent) override config values
    for flag, key in (
        ("seed", "seed"),
        ("k", "k_folds"),
        ("budget_duration", "chunk_duration"),
        ("budget_overhead", "overhead"),
        ("margin", "margin"),
        ("bundle", "bundle"),
        ("codebook", "codebook"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def _get_codebook(cfg: RunConfig):
    if cfg.codebook:
        return load_codebook(cfg.codebook)
    return DEFAULT_CODEBOOK


def _out_stream(args):
    return open(args.out, "w", encoding="utf-8", newline="") if getattr(args, "out", None) else sys.stdout


def _close_out(stream) -> None:
    if stream is not sys.stdout:
        stream.close()


def cmd_extract(args) -> int:
    cfg = _resolve_config(args)
    chunk = parse_chunk_stats(args.stats)
    vec = extract_features(chunk, args.bitrate, _get_codebook(cfg))
    stream = _out_stream(args)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(FEATURE_NAMES)
        writer.writerow([repr(float(v)) for v in vec])
    finally:
        _close_out(stream)
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    cfg = _resolve_config(args)
    codebook = _get_codebook(cfg)
    pairs = []
    for item in args.chunk:
        stats_path, sep, media_path = item.partition(":")
        if not sep:
            raise ValueError(f"--chunk expects <stats_path>:<media_path>, got {item!r}")
        pairs.append((parse_chunk_stats(stats_path), media_path))
    bitrates = [float(b) for b in args.bitrates.split(",") if b]
    dataset = assemble_dataset(
        pairs, bitrates, args.command, codebook=codebook, repeat=args.repeat
    )
    save_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} records to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    dataset = load_dataset(args.dataset)
    holdout = None
    if args.holdout is not None:
        dataset, holdout = split_dataset(dataset, 1.0 - args.holdout, seed=cfg.seed)
    bundle = train_all_presets(dataset, k=cfg.k_folds, seed=cfg.seed)
    rows = train_report_rows(bundle)
    print("cross-validation metrics (mean over folds):")
    print(format_aligned(TRAIN_REPORT_HEADER, rows), end="")
    if holdout is not None:
        held = evaluate_bundle(bundle, holdout)
        families = {p: bundle.entries[p].model.spec.family for p in bundle.entries}
        held_rows = metrics_report_rows(held, families)
        print("held-out metrics:")
        print(format_aligned(TRAIN_REPORT_HEADER, held_rows), end="")
    if args.report_csv:
        write_csv(args.report_csv, TRAIN_REPORT_HEADER, rows)
    out = args.out or cfg.bundle
    if not out:
        raise ValueError("no bundle output path: pass --out or set bundle in the config")
    save_bundle(bundle, out)
    print(f"bundle saved to {out}")
    return EXIT_OK


def cmd_featsel(args) -> int:
    cfg = _resolve_config(args)
    if not cfg.bundle:
        raise ValueError("featsel needs --bundle (or bundle in config)")
    dataset = load_dataset(args.dataset)
    bundle = load_bundle(cfg.bundle)
    new_bundle, raw_rows = retrain_with_selected(
        bundle, dataset, k=cfg.k_folds, seed=cfg.seed
    )
    rows = featsel_report_rows(raw_rows)
    print(format_aligned(FEATSEL_REPORT_HEADER, rows), end="")
    if args.report_csv:
        write_csv(args.report_csv, FEATSEL_REPORT_HEADER, rows)
    if args.indicator_csv:
        groups = dataset.by_preset()
        rankings = {}
        for preset in PRESETS:
            X, y, _ = groups[preset]
            model = bundle.entries[preset].model
            rankings[preset] = feature_importance(model, X, y, seed=cfg.seed)
        table = cross_preset_indicator(rankings)
        write_indicator_csv(table, args.indicator_csv, feature_names=list(FEATURE_NAMES))
        print(f"indicator table saved to {args.indicator_csv}")
    out = args.out
    if out:
        save_bundle(new_bundle, out)
        print(f"retrained bundle saved to {out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _resolve_config(args)
    if not cfg.bundle:
        raise ValueError("predict needs --bundle (or bundle in config)")
    bundle = load_bundle(cfg.bundle)
    chunk = parse_chunk_stats(args.stats)
    start = time.perf_counter()
    vec = extract_features(chunk, args.bitrate, _get_codebook(cfg))
    extract_s = time.perf_counter() - start
    times, latency = predict_all_presets(bundle, vec, feature_extract_seconds=extract_s)
    stream = _out_stream(args)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["chunk_id", *PRESETS, "latency_total"])
        writer.writerow([chunk.chunk_id] + [repr(times[p]) for p in PRESETS] + [repr(latency.total)])
    finally:
        _close_out(stream)
    return EXIT_OK


def cmd_select(args) -> int:
    cfg = _resolve_config(args)
    if not cfg.bundle:
        raise ValueError("select needs --bundle (or bundle in config)")
    bundle = load_bundle(cfg.bundle)
    chunk = parse_chunk_stats(args.stats)
    start = time.perf_counter()
    vec = extract_features(chunk, args.bitrate, _get_codebook(cfg))
    extract_s = time.perf_counter() - start
    times, latency = predict_all_presets(bundle, vec, feature_extract_seconds=extract_s)
    budget = compute_budget(cfg.chunk_duration, cfg.overhead)
    decision = select_preset(
        times, budget, margin=cfg.margin, latency=latency, chunk_id=chunk.chunk_id
    )
    stream = _out_stream(args)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(DECISION_HEADER)
        writer.writerow(decision_csv_row(decision))
    finally:
        _close_out(stream)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    table = load_ground_truth(args.ground_truth)
    budget = compute_budget(cfg.chunk_duration, cfg.overhead)
    bundle = None
    features_by_chunk = None
    if args.mode == "predicted":
        if not cfg.bundle:
            raise ValueError("predicted mode needs --bundle (or bundle in config)")
        if not args.features:
            raise ValueError("predicted mode needs --features <csv>")
        bundle = load_bundle(cfg.bundle)
        features_by_chunk = load_features_csv(args.features)
    report = simulate(
        table,
        budget,
        mode=args.mode,
        bundle=bundle,
        features_by_chunk=features_by_chunk,
        margin=cfg.margin,
    )
    stream = _out_stream(args)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["chunk_id", "chosen", "feasible", "measured_time", "psnr", "violation"])
        for d in report.decisions:
            writer.writerow(
                [
                    d.chunk_id,
                    d.chosen,
                    "true" if d.feasible else "false",
                    repr(d.measured_time),
                    repr(d.psnr),
                    "true" if d.violation else "false",
                ]
            )
    finally:
        _close_out(stream)
    print(f"mode: {report.mode}   budget: {report.budget:g} s/chunk")
    print(
        f"policy mean PSNR: {report.policy_mean_psnr:.4f} dB   "
        f"baseline (all-ultrafast): {report.baseline_mean_psnr:.4f} dB   "
        f"gain: {report.psnr_gain:+.4f} dB"
    )
    print(
        f"policy total time: {report.policy_total_time:.4f} s   "
        f"baseline total time: {report.baseline_total_time:.4f} s   "
        f"budget violations: {report.violations}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    if not cfg.bundle:
        raise ValueError("evaluate needs --bundle (or bundle in config)")
    bundle = load_bundle(cfg.bundle)
    dataset = load_dataset(args.dataset)
    held = evaluate_bundle(bundle, dataset)
    families = {p: bundle.entries[p].model.spec.family for p in bundle.entries}
    rows = metrics_report_rows(held, families)
    print("held-out metrics:")
    print(format_aligned(TRAIN_REPORT_HEADER, rows), end="")
    if args.report_csv:
        write_csv(args.report_csv, TRAIN_REPORT_HEADER, rows)
    return EXIT_OK


def _add_common(sub, *, budget=False, bundle=False, k=False) -> None:
    sub.add_argument("--config", help="key = value config file")
    sub.add_argument("--seed", type=int, default=None, help="master random seed")
    if bundle:
        sub.add_argument("--bundle", default=None, help="model bundle path")
    if k:
        sub.add_argument("--k", type=int, default=None, help="CV folds")
    if budget:
        sub.add_argument("--budget-duration", type=float, default=None, help="chunk duration (s)")
        sub.add_argument("--budget-overhead", type=float, default=None, help="prediction overhead (s)")
        sub.add_argument("--margin", type=float, default=None, help="prediction safety multiplier")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="presetsel",
        description="Per-preset transcoding time prediction and live preset selection.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    subs = parser.add_subparsers(dest="cmd", required=True)

    p = subs.add_parser("extract", help="chunk stats file -> canonical feature CSV row")
    p.add_argument("stats", help="chunk stats file")
    p.add_argument("--bitrate", type=float, required=True, help="target bitrate (kbps)")
    p.add_argument("--codebook", default=None, help="categorical codebook file")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("build-dataset", help="measure transcodes into a dataset CSV")
    p.add_argument("--chunk", action="append", required=True,
                   metavar="STATS:MEDIA", help="stats file and media file pair (repeatable)")
    p.add_argument("--bitrates", required=True, help="comma-separated target bitrates (kbps)")
    p.add_argument("--command", required=True,
                   help="transcoder template with {input} {preset} {bitrate} {output}")
    p.add_argument("--repeat", type=int, default=1, help="timing repeats per cell (median)")
    p.add_argument("--codebook", default=None)
    p.add_argument("--out", required=True, help="dataset CSV output path")
    _add_common(p)
    p.set_defaults(func=cmd_build_dataset)

    p = subs.add_parser("train", help="train per-preset models from a dataset CSV")
    p.add_argument("dataset", help="dataset CSV")
    p.add_argument("--out", default=None, help="bundle output path")
    p.add_argument("--holdout", type=float, default=None,
                   help="fraction held out for test metrics (reported separately)")
    p.add_argument("--report-csv", default=None, help="also write the report as CSV")
    _add_common(p, bundle=True, k=True)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("featsel", help="per-preset RFECV and retraining")
    p.add_argument("dataset", help="dataset CSV")
    p.add_argument("--out", default=None, help="retrained bundle output path")
    p.add_argument("--report-csv", default=None)
    p.add_argument("--indicator-csv", default=None,
                   help="write the cross-preset inverse-rank indicator table")
    _add_common(p, bundle=True, k=True)
    p.set_defaults(func=cmd_featsel)

    p = subs.add_parser("predict", help="predict all 9 preset times for one chunk")
    p.add_argument("stats", help="chunk stats file")
    p.add_argument("--bitrate", type=float, required=True)
    p.add_argument("--codebook", default=None)
    p.add_argument("--out", default=None)
    _add_common(p, bundle=True)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("select", help="choose the slowest preset fitting the budget")
    p.add_argument("stats", help="chunk stats file")
    p.add_argument("--bitrate", type=float, required=True)
    p.add_argument("--codebook", default=None)
    p.add_argument("--out", default=None)
    _add_common(p, budget=True, bundle=True)
    p.set_defaults(func=cmd_select)

    p = subs.add_parser("simulate", help="replay selection against a ground-truth table")
    p.add_argument("ground_truth", help="CSV with chunk_id,preset,transcode_time,psnr")
    p.add_argument("--mode", choices=["oracle", "predicted"], default="oracle")
    p.add_argument("--features", default=None,
                   help="per-chunk features CSV (predicted mode)")
    p.add_argument("--out", default=None, help="per-chunk decisions CSV (default stdout)")
    _add_common(p, budget=True, bundle=True)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("evaluate", help="score a bundle against a labelled dataset")
    p.add_argument("dataset", help="dataset CSV")
    p.add_argument("--report-csv", default=None)
    _add_common(p, bundle=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses exit code 2 for usage errors
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
