"""Experiment runner and score/MOS correlation.

Regenerates the evaluation design: for each reference clip, scenario
(2 = drops only, 3a = drops + LSB noise, 3b = drops + 4th-LSB noise),
case, and possibility, a seeded drop plan is drawn, the distortion applied,
and the full pipeline scored. One CSV row per attempted cell; cells whose
possibility has no qualifying site are recorded as skipped, not fatal.
"""

from __future__ import annotations

import csv
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .alignment import DEFAULT_GA, GAConfig
from .correction import ConcealmentStrategy
from .dfvqm_index import QualityReport, VARIANT_FULL_CHUNK, dfvqmi
from .distortion_lab import (
    CASE_LABELS,
    POSSIBILITY_LABELS,
    FrameSimilarity,
    SpatialSpec,
    drop_frames,
    embed_bitplane,
    plan_drops,
)
from .errors import CorrelationError, DfvqmError, FormatError
from .frame_metrics import DEFAULT_CONFIG, MetricConfig
from .video_io import VideoSequence, read_y4m

SCENARIOS = ("2", "3a", "3b")
_SCENARIO_BITPLANE = {"2": None, "3a": 0, "3b": 3}

CSV_COLUMNS = (
    "video", "scenario", "case", "possibility", "cfd_pct", "tdf_pct",
    "sd", "td", "dfvqmi", "mean_psnr", "mean_ssim", "seed", "status", "reason",
)

STATUS_OK = "ok"
STATUS_SKIPPED = "skipped"
STATUS_ERROR = "error"


@dataclass(frozen=True)
class ExperimentConfig:
    reference_videos: Tuple[str, ...]
    cases: Tuple[str, ...] = CASE_LABELS
    possibilities: Tuple[int, ...] = POSSIBILITY_LABELS
    scenarios: Tuple[str, ...] = SCENARIOS
    seed: int = 0
    repeats: int = 1
    sim_threshold: float = 0.9
    strategy: ConcealmentStrategy = ConcealmentStrategy.REPEAT_LAST
    eq2_variant: str = VARIANT_FULL_CHUNK
    metric_config: MetricConfig = DEFAULT_CONFIG
    ga_config: GAConfig = DEFAULT_GA
    output: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.reference_videos:
            raise DfvqmError("experiment needs at least one reference video")
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise DfvqmError(f"unknown scenario {s!r} (expected one of {SCENARIOS})")
        for c in self.cases:
            if c not in CASE_LABELS:
                raise DfvqmError(f"unknown case {c!r}")
        for p in self.possibilities:
            if p not in POSSIBILITY_LABELS:
                raise DfvqmError(f"unknown possibility {p!r}")
        if self.repeats < 1:
            raise DfvqmError("repeats must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        kwargs: dict = {"reference_videos": tuple(data["reference_videos"])}
        for key in ("seed", "repeats", "sim_threshold", "eq2_variant", "output"):
            if key in data:
                kwargs[key] = data[key]
        if "cases" in data:
            kwargs["cases"] = tuple(str(c) for c in data["cases"])
        if "possibilities" in data:
            kwargs["possibilities"] = tuple(int(p) for p in data["possibilities"])
        if "scenarios" in data:
            kwargs["scenarios"] = tuple(str(s) for s in data["scenarios"])
        if "strategy" in data:
            kwargs["strategy"] = ConcealmentStrategy(data["strategy"])
        if "metric_config" in data:
            kwargs["metric_config"] = MetricConfig(**data["metric_config"])
        if "ga_config" in data:
            kwargs["ga_config"] = GAConfig(**data["ga_config"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ScoreRow:
    video: str
    scenario: str
    case_label: str
    possibility: int
    seed: int
    status: str
    reason: str = ""
    cfd_pct: Optional[float] = None
    tdf_pct: Optional[float] = None
    sd: Optional[float] = None
    td: Optional[float] = None
    dfvqmi: Optional[float] = None
    mean_psnr: Optional[float] = None
    mean_ssim: Optional[float] = None

    def to_csv_fields(self) -> List[str]:
        def num(x: Optional[float]) -> str:
            return "" if x is None else f"{x:.9f}"

        return [
            self.video, self.scenario, self.case_label, str(self.possibility),
            num(self.cfd_pct), num(self.tdf_pct), num(self.sd), num(self.td),
            num(self.dfvqmi), num(self.mean_psnr), num(self.mean_ssim),
            str(self.seed), self.status, self.reason,
        ]


def _cell_seed(base: int, *key: int) -> int:
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFF, *key])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _overall_mean_ssim(report: QualityReport) -> float:
    """Whole-sequence mean SSIM recovered from SD and the chunk c2 terms.

    Exact for the full_chunk variant, where each chunk's concealed-frame SSIM
    sum is length * (1 - c2).
    """
    total = report.sd * report.n
    for c in report.chunks:
        total += c.length * (1.0 - c.c2)
    return total / report.m


def _run_cell(
    video: VideoSequence,
    video_label: str,
    similarity: FrameSimilarity,
    scenario: str,
    case_label: str,
    possibility: int,
    cell_seed: int,
    config: ExperimentConfig,
) -> ScoreRow:
    common = dict(
        video=video_label, scenario=scenario, case_label=case_label,
        possibility=possibility, seed=cell_seed,
    )
    try:
        plan = plan_drops(
            video, case_label, possibility, cell_seed,
            sim_threshold=config.sim_threshold,
            cfg=config.metric_config,
            similarity=similarity,
        )
    except DfvqmError as exc:
        return ScoreRow(status=STATUS_SKIPPED, reason=str(exc), **common)
    try:
        distorted = drop_frames(video, plan)
        bitplane = _SCENARIO_BITPLANE[scenario]
        if bitplane is not None:
            distorted = embed_bitplane(
                distorted, SpatialSpec(bitplane=bitplane, seed=_cell_seed(cell_seed, 1))
            )
        report = dfvqmi(
            video, distorted,
            cfg=config.metric_config,
            ga=config.ga_config,
            strategy=config.strategy,
            variant=config.eq2_variant,
        )
    except DfvqmError as exc:
        return ScoreRow(status=STATUS_ERROR, reason=str(exc), **common)
    return ScoreRow(
        status=STATUS_OK,
        cfd_pct=plan.cfd_pct,
        tdf_pct=plan.tdf_pct,
        sd=report.sd,
        td=report.td,
        dfvqmi=report.dfvqmi,
        mean_psnr=report.mean_psnr_nondropped,
        mean_ssim=_overall_mean_ssim(report),
        **common,
    )


def _thread_count() -> int:
    raw = os.environ.get("VQ_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_experiment_grid(
    config: ExperimentConfig,
    videos: Optional[Sequence[VideoSequence]] = None,
) -> List[ScoreRow]:
    """Score every grid cell; rows come back in deterministic cell order.

    Pre-loaded sequences may be passed to bypass file I/O (paths in the
    config are then used only as row labels).
    """
    if videos is None:
        loaded = []
        for path in config.reference_videos:
            with open(path, "rb") as fh:
                loaded.append(read_y4m(fh, source_name=Path(path).stem))
        videos = loaded
    elif len(videos) != len(config.reference_videos):
        raise DfvqmError("videos and reference_videos must have equal length")

    scenarios = tuple(s for s in SCENARIOS if s in config.scenarios)
    cells = []
    for vi, (path, video) in enumerate(zip(config.reference_videos, videos)):
        label = video.source_name or Path(path).stem
        similarity = FrameSimilarity(video, config.metric_config)
        for si, scenario in enumerate(scenarios):
            for ci, case_label in enumerate(config.cases):
                for pi, possibility in enumerate(config.possibilities):
                    for rep in range(config.repeats):
                        seed = _cell_seed(config.seed, vi, si, ci, pi, rep)
                        cells.append(
                            (video, label, similarity, scenario, case_label, possibility, seed)
                        )

    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_cell, *cell, config) for cell in cells]
            return [f.result() for f in futures]  # buffered back in cell order
    return [_run_cell(*cell, config) for cell in cells]


def write_scores_csv(rows: Sequence[ScoreRow], path) -> None:
    """Schema-stable CSV, written atomically (temp file + rename)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow(row.to_csv_fields())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_labeled_values(path, metric: str = "dfvqmi") -> List[Tuple[str, float]]:
    """Read (label, value) pairs from a CSV.

    Accepts either the experiment CSV (label is video/scenario/case/possibility,
    value is the requested metric column, skipped/errored rows dropped) or a
    plain two-column label,value file with an optional header.
    """
    with open(path, newline="") as fh:
        reader = list(csv.reader(fh))
    if not reader:
        raise FormatError(f"{path}: empty CSV")
    out: List[Tuple[str, float]] = []
    if tuple(reader[0]) == CSV_COLUMNS:
        col = CSV_COLUMNS.index(metric)
        for rec in reader[1:]:
            if len(rec) == len(CSV_COLUMNS) and rec[CSV_COLUMNS.index("status")] == STATUS_OK:
                label = "/".join(rec[:4])
                out.append((label, float(rec[col])))
        return out
    for rec in reader:
        if len(rec) < 2:
            continue
        try:
            out.append((rec[0], float(rec[1])))
        except ValueError:
            continue  # header or junk line
    if not out:
        raise FormatError(f"{path}: no (label, value) rows found")
    return out


def correlate(
    scores: Sequence[Tuple[str, float]],
    mos: Sequence[Tuple[str, float]],
) -> dict:
    """Pearson and Spearman correlation over label-joined pairs."""
    mos_map: Dict[str, float] = dict(mos)
    joined = [(v, mos_map[label]) for label, v in scores if label in mos_map]
    n = len(joined)
    if n < 3:
        raise CorrelationError(f"need at least 3 shared labels, got {n}")
    xs = np.array([a for a, _ in joined])
    ys = np.array([b for _, b in joined])
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        side = "scores" if np.ptp(xs) == 0 else "mos"
        return {"pearson": None, "spearman": None, "n": n,
                "reason": f"undefined: zero variance in {side}"}
    pearson = float(stats.pearsonr(xs, ys).statistic)
    spearman = float(stats.spearmanr(xs, ys).statistic)
    return {"pearson": pearson, "spearman": spearman, "n": n}
