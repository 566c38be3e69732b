"""Command-line entry point.

Subcommands:
    preprocess  normalize, box-filter, optionally augment and resample sequences
    convert     LiDAR -> mmWave-style conversion (NPA -> FPF -> RS -> NI)
    loss        consistency loss of predicted skeletons against observed clouds
    metrics     MPJPE / PA-MPJPE of predicted against ground-truth sequences
    stats       per-frame CSV of point counts, stage counts and flow histograms

Exit codes: 0 success, 1 parse / I/O / config error, 2 contract violation.
Output grammars are documented in FORMAT.md.

Example:
    $ python main.py convert --in data/lidar --out data/converted --seed 7 --jobs 8
    $ python main.py metrics --pred out/pred.jsonl --gt data/gt.jsonl
"""

import argparse
import sys
import time
from pathlib import Path

from config import Config, ConfigError, load_config
from conversion import ConversionError
from dataset_loader import discover_sequence_files
from emitter import emit_log_entry, read_records
from evaluation import MetricsError, aggregate_metrics, frame_rows, render_csv, sequence_metrics, write_csv
from geometry import GeometryError, Sequence
from preprocess import PreprocessError
from run_paths import build_file_paths, stage_log_path
from runner import ConvertJob, PreprocessJob, build_log_entry, convert_one, preprocess_one, run_jobs
from schemas import LossReport, RunSummary, SequenceMetrics, StageRecord
from sequence_io import SequenceFormatError, SequenceIOError, read_sequence
from utcl import UtclError, sequence_consistency, utcl_loss

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_CONTRACT = 2


class CommandError(ValueError):
    """Invalid invocation that argparse cannot catch (missing seed, missing prediction)."""


PARSE_ERRORS = (SequenceFormatError, SequenceIOError, ConfigError, OSError)
CONTRACT_ERRORS = (CommandError, ConversionError, PreprocessError, UtclError, MetricsError, GeometryError)


def _verbose(args: argparse.Namespace, message: str) -> None:
    if args.verbose:
        print(message, file=sys.stderr)


def _log(args: argparse.Namespace, role: str, content: str, **fields) -> None:
    if args.log is not None:
        emit_log_entry(args.log, build_log_entry(stage=args.command, role=role, content=content, **fields))


def _read_named(path: Path) -> Sequence:
    seq = read_sequence(path)
    if not seq.name:
        seq = seq.with_frames(seq.frames, name=path.stem)
    return seq


def _discover(paths: list[Path]) -> list[Path]:
    files = []
    for path in paths:
        found = discover_sequence_files(path)
        if not found:
            raise SequenceIOError(f"{path}: no sequence files found")
        files.extend(found)
    return files


def _resolve_seed(args: argparse.Namespace, config: Config) -> int | None:
    return args.seed if args.seed is not None else config.seed


def _report_runs(args: argparse.Namespace, summaries: list[RunSummary]) -> None:
    for summary in summaries:
        stages = " -> ".join(f"{key} {value:.1f}" for key, value in summary.mean_points.items())
        line = f"{summary.sequence}: {summary.frames} frames, mean points {stages}"
        if summary.offset is not None:
            line += ", offset " + " ".join(f"{v:.4f}" for v in summary.offset)
        print(line)
        _verbose(args, f"✅ {summary.input} -> {summary.output}")
        _log(args, "info", f"wrote {summary.output}", sequence=summary.sequence,
             duration_seconds=summary.duration_seconds)


def cmd_preprocess(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    seed = _resolve_seed(args, config)
    if args.augment and seed is None:
        raise CommandError("preprocess --augment requires --seed (or seed in the config file)")
    pairs = build_file_paths(args.source, args.out, args.format)
    if not pairs:
        raise SequenceIOError(f"{args.source}: no sequence files found")
    jobs = [
        PreprocessJob(paths=p, config=config.preprocess, seed=seed, augment=args.augment, fmt=args.format)
        for p in pairs
    ]
    _report_runs(args, run_jobs(preprocess_one, jobs, args.jobs))
    return EXIT_OK


def cmd_convert(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    seed = _resolve_seed(args, config)
    if seed is None:
        raise CommandError("convert requires --seed (or seed in the config file)")
    pairs = build_file_paths(args.source, args.out, args.format)
    if not pairs:
        raise SequenceIOError(f"{args.source}: no sequence files found")
    jobs = [ConvertJob(paths=p, config=config.conversion, seed=seed, fmt=args.format) for p in pairs]
    _report_runs(args, run_jobs(convert_one, jobs, args.jobs))
    return EXIT_OK


def format_loss(report: LossReport) -> str:
    """key=value lines, floats with 6 decimals; l_lab only when ground truth was given."""
    lines = [f"l_dyn={report.l_dyn:.6f}", f"l_sta={report.l_sta:.6f}", f"l_con={report.l_con:.6f}"]
    if report.l_lab is not None:
        lines.append(f"l_lab={report.l_lab:.6f}")
    lines.append(f"l_total={report.l_total:.6f}")
    lines.append(f"pairs={report.pairs}")
    if report.pairs == 1 and (report.dyn_indices or report.sta_indices):
        lines.append("dyn_joints=" + ",".join(str(j) for j in report.dyn_indices))
        lines.append("sta_joints=" + ",".join(str(j) for j in report.sta_indices))
    return "\n".join(lines)


def _pair_loss(clouds: Sequence, pred: Sequence, gt: Sequence | None, t: int, config: Config) -> LossReport:
    index = next((k for k, frame in enumerate(clouds.frames) if frame.t == t), None)
    if index is None:
        raise UtclError(f"no frame with t={t}")
    if index == 0:
        raise UtclError(f"frame t={t} has no previous frame")
    if len(pred) != len(clouds) or not pred.is_labeled:
        raise UtclError("prediction must be labeled and as long as the cloud sequence")
    for k in (index - 1, index):
        if pred.frames[k].t != clouds.frames[k].t:
            raise UtclError(f"timestep mismatch at frame index {k}")
    s_gt = None
    if gt is not None:
        if len(gt) != len(clouds) or not gt.is_labeled or gt.frames[index].t != t:
            raise UtclError("ground-truth sequence must be labeled and aligned with the cloud sequence")
        s_gt = gt.frames[index].skeleton
    return utcl_loss(
        clouds.frames[index].cloud,
        pred.frames[index].skeleton,
        pred.frames[index - 1].skeleton,
        config.utcl,
        s_gt,
    )


def cmd_loss(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.pred is None or not args.pred.exists():
        raise CommandError("loss requires --pred naming an existing file of predicted skeletons")
    clouds = read_sequence(args.source)
    pred = read_sequence(args.pred)
    gt = None if args.gt is None else read_sequence(args.gt)
    if args.frame is None:
        report = sequence_consistency(clouds, pred, config.utcl, gt)
    else:
        report = _pair_loss(clouds, pred, gt, args.frame, config)
    print(format_loss(report))
    _log(args, "info", f"l_con={report.l_con:.6f} over {report.pairs} pair(s)")
    return EXIT_OK


def format_metrics(report: SequenceMetrics) -> str:
    return f"{report.name}: MPJPE {report.mpjpe_cm:.2f}, PA-MPJPE {report.pa_mpjpe_cm:.2f}"


def _keyed_files(paths: list[Path]) -> dict[str, Path]:
    """Sequence files keyed by their path relative to the given root, without suffix."""
    keyed: dict[str, Path] = {}
    for root in paths:
        found = discover_sequence_files(root)
        if not found:
            raise SequenceIOError(f"{root}: no sequence files found")
        for path in found:
            key = path.stem if path == root else path.relative_to(root).with_suffix("").as_posix()
            if key in keyed:
                raise MetricsError(f"{path}: sequence {key!r} given twice")
            keyed[key] = path
    return keyed


def _pair_files(pred_args: list[Path], gt_args: list[Path]) -> list[tuple[Path, Path]]:
    """Explicit files pair in the order given; directories pair by relative name."""
    if all(p.is_file() for p in pred_args + gt_args):
        if len(pred_args) != len(gt_args):
            raise MetricsError(f"{len(pred_args)} prediction file(s) but {len(gt_args)} ground-truth file(s)")
        return list(zip(pred_args, gt_args))
    pred = _keyed_files(pred_args)
    gt = _keyed_files(gt_args)
    unmatched = sorted(set(pred) ^ set(gt))
    if unmatched:
        raise MetricsError("sequences without a counterpart: " + ", ".join(unmatched))
    return [(pred[key], gt[key]) for key in gt]


def cmd_metrics(args: argparse.Namespace) -> int:
    if args.pred is None or args.gt is None:
        raise CommandError("metrics requires --pred and --gt")
    reports = []
    for pred_path, gt_path in _pair_files(args.pred, args.gt):
        report = sequence_metrics(_read_named(pred_path), _read_named(gt_path))
        reports.append(report)
        print(format_metrics(report))
    print(format_metrics(aggregate_metrics(reports)))
    return EXIT_OK


def _stage_records(path: Path) -> list[StageRecord] | None:
    sidecar = stage_log_path(path)
    if not sidecar.exists():
        return None
    try:
        return read_records(sidecar, StageRecord)
    except ValueError as exc:
        raise SequenceFormatError(f"{sidecar}: invalid stage record: {exc}") from exc


def cmd_stats(args: argparse.Namespace) -> int:
    rows = []
    for path in _discover(args.inputs):
        rows.extend(frame_rows(_read_named(path), _stage_records(path)))
        _verbose(args, f"📊 {path}")
    if args.out is None:
        sys.stdout.write(render_csv(rows))
    else:
        write_csv(args.out, rows)
    return EXIT_OK


COMMANDS = {
    "preprocess": cmd_preprocess,
    "convert": cmd_convert,
    "loss": cmd_loss,
    "metrics": cmd_metrics,
    "stats": cmd_stats,
}

COMMAND_HELP = {
    "preprocess": "Normalize, box-filter, optionally augment and resample sequences",
    "convert": "Convert labeled LiDAR sequences into mmWave-style sequences",
    "loss": "Consistency loss of predicted skeletons against observed clouds",
    "metrics": "MPJPE and PA-MPJPE in cm, per sequence and aggregate",
    "stats": "Per-frame point counts, stage counts and flow histograms as CSV",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmconv", description="LiDAR to mmWave point-cloud conversion toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML config (defaults when omitted)")
    common.add_argument("--log", type=Path, default=None, help="Append JSONL run-log entries to this file")
    common.add_argument("-v", "--verbose", action="store_true", help="Progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("preprocess", "convert"):
        p = sub.add_parser(name, parents=[common], help=COMMAND_HELP[name])
        p.add_argument("--in", dest="source", type=Path, required=True, help="Sequence file or directory of them")
        p.add_argument("--out", type=Path, required=True, help="Output file, or directory for directory input")
        p.add_argument("--seed", type=int, default=None, help="64-bit seed (overrides the config file)")
        p.add_argument("--jobs", type=int, default=1, help="Worker processes (default: 1)")
        p.add_argument("--format", choices=["text", "binary"], default="text")
    sub.choices["preprocess"].add_argument("--augment", action="store_true",
                                           help="Apply one random rotation/scale/translation per clip")

    p = sub.add_parser("loss", parents=[common], help=COMMAND_HELP["loss"])
    p.add_argument("--in", dest="source", type=Path, required=True, help="Sequence holding the observed point clouds")
    p.add_argument("--pred", type=Path, default=None, help="Sequence holding predicted skeletons")
    p.add_argument("--gt", type=Path, default=None, help="Ground-truth skeletons (adds l_lab)")
    p.add_argument("--frame", type=int, default=None,
                   help="Timestep t of a single pair (t-1, t); default averages all pairs")

    p = sub.add_parser("metrics", parents=[common], help=COMMAND_HELP["metrics"])
    p.add_argument("--pred", type=Path, action="append", help="Predicted sequence file(s) or directory")
    p.add_argument("--gt", type=Path, action="append", help="Ground-truth sequence file(s) or directory")

    p = sub.add_parser("stats", parents=[common], help=COMMAND_HELP["stats"])
    p.add_argument("--in", dest="inputs", type=Path, action="append", required=True,
                   help="Sequence files or directories (repeatable)")
    p.add_argument("--out", type=Path, default=None, help="CSV path (stdout when omitted)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        _log(args, "error", str(exc))
        return EXIT_PARSE
    except CONTRACT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        _log(args, "error", str(exc))
        return EXIT_CONTRACT
    _log(args, "info", "done", duration_seconds=time.perf_counter() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())
