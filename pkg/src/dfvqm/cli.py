"""Command-line surface.

Subcommands: metrics, align, analyze, distort, experiment, correlate.
Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

from .alignment import GAConfig, identify_dropped_frames
from .correction import ConcealmentStrategy, construct_corrected
from .dfvqm_index import VARIANT_FULL_CHUNK, VARIANT_LITERAL, dfvqmi
from .distortion_lab import (
    CASE_LABELS,
    DropPlan,
    SpatialSpec,
    drop_frames,
    embed_bitplane,
    plan_drops,
)
from .errors import DfvqmError
from .frame_metrics import MetricConfig, mse, psnr, ssim
from .harness import (
    ExperimentConfig,
    correlate,
    read_labeled_values,
    run_experiment_grid,
    write_scores_csv,
)
from .video_io import VideoSequence, read_raw_yuv, read_y4m, write_y4m

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_video(path: str, args: argparse.Namespace) -> VideoSequence:
    name = Path(path).stem
    with open(path, "rb") as fh:
        if path.endswith(".y4m"):
            return read_y4m(fh, source_name=name)
        if args.width is None or args.height is None:
            raise DfvqmError(
                f"{path}: raw YUV input needs --width and --height (or use a .y4m file)"
            )
        return read_raw_yuv(
            fh, args.width, args.height, layout=args.layout, source_name=name
        )


def _add_geometry_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--width", type=int, default=None, help="raw input width in pixels")
    parser.add_argument("--height", type=int, default=None, help="raw input height in pixels")
    parser.add_argument(
        "--layout", choices=("I420", "luma_only"), default="I420",
        help="raw input plane layout (default I420)",
    )


def _add_ga_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ga-seed", type=int, default=0)
    parser.add_argument("--ga-population", type=int, default=32)
    parser.add_argument("--ga-generations", type=int, default=200)
    parser.add_argument("--ga-mutation-rate", type=float, default=0.2)


def _ga_from_args(args: argparse.Namespace) -> GAConfig:
    return GAConfig(
        population_size=args.ga_population,
        generations=args.ga_generations,
        mutation_rate=args.ga_mutation_rate,
        seed=args.ga_seed,
    )


def _write_atomic(path: str, write_fn) -> None:
    """Write via temp file + rename so failures leave nothing behind."""
    parent = Path(path).parent
    fd, tmp = tempfile.mkstemp(dir=parent if str(parent) else ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cmd_metrics(args: argparse.Namespace) -> int:
    ref = _load_video(args.ref, args)
    dist = _load_video(args.dist, args)
    if len(ref) != len(dist):
        raise DfvqmError(
            f"metrics needs equal-length sequences, got {len(ref)} vs {len(dist)}"
        )
    cfg = MetricConfig()
    print("frame,mse,psnr,ssim")
    for i in range(len(ref)):
        print(
            f"{i},{mse(ref[i], dist[i]):.9f},"
            f"{psnr(ref[i], dist[i], cfg):.9f},{ssim(ref[i], dist[i], cfg):.9f}"
        )
    return EXIT_OK


def _cmd_align(args: argparse.Namespace) -> int:
    ref = _load_video(args.ref, args)
    dist = _load_video(args.dist, args)
    alignment = identify_dropped_frames(ref, dist, ga=_ga_from_args(args))
    print(json.dumps({
        "mapping": list(alignment.mapping),
        "missing": list(alignment.missing),
        "chunk_lengths": list(alignment.chunk_lengths),
        "method": alignment.method,
        "fitness": alignment.fitness,
    }, indent=2))
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    ref = _load_video(args.ref, args)
    dist = _load_video(args.dist, args)
    ga = _ga_from_args(args)
    alignment = identify_dropped_frames(ref, dist, ga=ga)
    if args.emit_corrected:
        corrected = construct_corrected(dist, alignment, ConcealmentStrategy(args.strategy))
        _write_atomic(args.emit_corrected, lambda fh: write_y4m(corrected, fh))
    report = dfvqmi(
        ref, dist, ga=ga,
        strategy=ConcealmentStrategy(args.strategy),
        variant=args.eq2_variant,
        alignment=alignment,
    )
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def _cmd_distort(args: argparse.Namespace) -> int:
    ref = _load_video(args.ref, args)
    if args.plan:
        with open(args.plan) as fh:
            plan = DropPlan.from_dict(json.load(fh))
    elif args.case:
        plan = plan_drops(
            ref, args.case, args.possibility, args.seed,
            sim_threshold=args.sim_threshold,
        )
    else:
        plan = None
        if args.bitplane is None:
            raise DfvqmError("distort needs --plan, --case, or --bitplane")

    out = ref if plan is None else drop_frames(ref, plan)
    if args.bitplane is not None:
        out = embed_bitplane(out, SpatialSpec(bitplane=args.bitplane, seed=args.seed))
    _write_atomic(args.out, lambda fh: write_y4m(out, fh))
    if plan is not None and args.plan_out:
        payload = json.dumps(plan.to_dict(), indent=2).encode()
        _write_atomic(args.plan_out, lambda fh: fh.write(payload))
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    with open(args.config) as fh:
        data = json.load(fh)
    config = ExperimentConfig.from_dict(data)
    if args.repeats is not None:
        data["repeats"] = args.repeats
        config = ExperimentConfig.from_dict(data)
    output = args.output or config.output
    if not output:
        raise DfvqmError("no output path: pass --output or set \"output\" in the config")
    rows = run_experiment_grid(config)
    write_scores_csv(rows, output)
    print(f"wrote {len(rows)} rows to {output}")
    if args.figures:
        from .report import render_figures

        paths = render_figures(rows, args.figures)
        for p in paths:
            print(f"wrote {p}")
    return EXIT_OK


def _cmd_correlate(args: argparse.Namespace) -> int:
    scores = read_labeled_values(args.scores, metric=args.metric)
    mos = read_labeled_values(args.mos)
    print(json.dumps(correlate(scores, mos), indent=2))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="dfvqm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="per-frame MSE/PSNR/SSIM table for a pair")
    p.add_argument("--ref", required=True)
    p.add_argument("--dist", required=True)
    _add_geometry_flags(p)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("align", help="identify dropped frame indices")
    p.add_argument("--ref", required=True)
    p.add_argument("--dist", required=True)
    _add_geometry_flags(p)
    _add_ga_flags(p)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("analyze", help="full quality report for a pair")
    p.add_argument("--ref", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--strategy", choices=[s.value for s in ConcealmentStrategy],
                   default=ConcealmentStrategy.REPEAT_LAST.value)
    p.add_argument("--eq2-variant", choices=(VARIANT_FULL_CHUNK, VARIANT_LITERAL),
                   default=VARIANT_FULL_CHUNK)
    p.add_argument("--emit-corrected", metavar="OUT_Y4M", default=None,
                   help="also write the corrected sequence")
    _add_geometry_flags(p)
    _add_ga_flags(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("distort", help="apply a drop plan and/or bitplane noise")
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--case", choices=CASE_LABELS, default=None)
    p.add_argument("--possibility", type=int, choices=(1, 2, 3, 4), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sim-threshold", type=float, default=0.9)
    p.add_argument("--bitplane", type=int, choices=(0, 3), default=None)
    p.add_argument("--plan", default=None, help="apply an existing plan JSON")
    p.add_argument("--plan-out", default=None, help="write the generated plan JSON")
    _add_geometry_flags(p)
    p.set_defaults(func=_cmd_distort)

    p = sub.add_parser("experiment", help="run the case/possibility/scenario grid")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--output", default=None, help="CSV path (overrides config)")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--figures", metavar="DIR", default=None,
                   help="also render summary figures into DIR")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("correlate", help="correlate scores against a MOS table")
    p.add_argument("--scores", required=True)
    p.add_argument("--mos", required=True)
    p.add_argument("--metric", default="dfvqmi",
                   help="score column when --scores is an experiment CSV")
    p.set_defaults(func=_cmd_correlate)
    return parser


def cli_dispatch(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DfvqmError as exc:
        print(f"dfvqm: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"dfvqm: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_dispatch())
