"""Dropped-frame identification.

Pipeline: a PSNR candidate matrix (each distorted frame scored against its
feasible reference window), a longest-strictly-increasing-subsequence fast
path over the per-row best matches, and a seeded mutation+elitism genetic
refinement when the fast path cannot explain every row.

A mapping of n distorted frames onto m reference frames with d = m - n drops
is strictly increasing with r(i) in [i, i+d]; equivalently the per-row offset
s(i) = r(i) - i is a nondecreasing walk over [0, d]. The GA operates on that
offset form, which makes monotonicity repair trivial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError
from .frame_metrics import DEFAULT_CONFIG, MetricConfig, psnr, psnr_from_mse
from .video_io import VideoSequence

METHOD_TRIVIAL = "trivial_no_drop"
METHOD_EXACT_LIS = "exact_lis"
METHOD_GA = "ga_refined"


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 32
    generations: int = 200
    mutation_rate: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not (0.0 < self.mutation_rate <= 1.0):
            raise ValueError("mutation_rate must lie in (0, 1]")


DEFAULT_GA = GAConfig()


@dataclass(frozen=True)
class DiffMatrix:
    """Per-row PSNR of distorted frame i against reference candidates [i, i+d]."""

    psnr: np.ndarray        # shape (n, d+1)
    best_psnr: np.ndarray   # shape (n,)
    best_index: np.ndarray  # shape (n,), absolute reference indices

    @property
    def n(self) -> int:
        return self.psnr.shape[0]

    @property
    def d(self) -> int:
        return self.psnr.shape[1] - 1

    @property
    def m(self) -> int:
        return self.n + self.d


@dataclass(frozen=True)
class Alignment:
    """Result of dropped-frame identification for one (V_R, V_D) pair."""

    mapping: tuple          # r(i) for each distorted index i
    missing: tuple          # sorted dropped reference indices
    chunk_lengths: tuple    # lengths of maximal runs in missing
    method: str
    fitness: float          # mean PSNR over all matched pairs

    def __post_init__(self) -> None:
        n = len(self.mapping)
        m = n + len(self.missing)
        d = len(self.missing)
        for i, r in enumerate(self.mapping):
            if not (i <= r <= i + d):
                raise AlignmentError(f"mapping r({i})={r} outside window [{i}, {i + d}]")
            if i and r <= self.mapping[i - 1]:
                raise AlignmentError("mapping is not strictly increasing")
        expect_missing = tuple(sorted(set(range(m)) - set(self.mapping)))
        if tuple(self.missing) != expect_missing:
            raise AlignmentError("missing indices are not the complement of the mapping")
        if tuple(self.chunk_lengths) != tuple(chunks_from_missing(self.missing)):
            raise AlignmentError("chunk_lengths inconsistent with missing")

    @property
    def n(self) -> int:
        return len(self.mapping)

    @property
    def m(self) -> int:
        return len(self.mapping) + len(self.missing)

    @property
    def d(self) -> int:
        return len(self.missing)


def chunks_from_missing(missing: Sequence[int]) -> tuple:
    """Lengths of maximal runs of consecutive indices, in order."""
    missing = list(missing)
    if any(b <= a for a, b in zip(missing, missing[1:])):
        raise AlignmentError("missing indices must be sorted and distinct")
    chunks = []
    run = 0
    prev = None
    for idx in missing:
        if prev is not None and idx == prev + 1:
            run += 1
        else:
            if run:
                chunks.append(run)
            run = 1
        prev = idx
    if run:
        chunks.append(run)
    return tuple(chunks)


def chunk_starts(missing: Sequence[int], chunk_lengths: Sequence[int]) -> tuple:
    """First dropped index of each chunk."""
    starts = []
    pos = 0
    for length in chunk_lengths:
        starts.append(missing[pos])
        pos += length
    return tuple(starts)


def build_diff_matrix(
    reference: VideoSequence,
    distorted: VideoSequence,
    cfg: MetricConfig = DEFAULT_CONFIG,
) -> DiffMatrix:
    m, n = len(reference), len(distorted)
    if m < n:
        raise AlignmentError(f"distorted sequence longer than reference (m={m} < n={n})")
    d = m - n
    dyn = cfg.range_for(reference[0])

    ref = np.stack([f.luma for f in reference]).astype(np.float64)
    dist = np.stack([f.luma for f in distorted]).astype(np.float64)

    values = np.empty((n, d + 1), dtype=np.float64)
    for i in range(n):
        diff = ref[i : i + d + 1] - dist[i]
        errs = np.mean(diff * diff, axis=(1, 2))
        values[i] = [psnr_from_mse(e, dyn, cfg) for e in errs]
    best_col = np.argmax(values, axis=1)  # argmax takes the first (smallest) index on ties
    return DiffMatrix(
        psnr=values,
        best_psnr=values[np.arange(n), best_col],
        best_index=best_col + np.arange(n),
    )


def lis_of_best_indices(dm: DiffMatrix) -> tuple:
    """Row positions of a longest strictly increasing run in best_index.

    Among equal-length answers the lexicographically smallest position set is
    returned, so downstream refinement is deterministic.
    """
    v = dm.best_index
    n = len(v)
    # f[i]: length of the longest strictly increasing subsequence starting at i
    f = np.ones(n, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        better = f[i + 1 :][v[i + 1 :] > v[i]]
        if len(better):
            f[i] = 1 + better.max()
    length = int(f.max())
    rows = []
    prev_val = -1
    pos = 0
    for need in range(length, 0, -1):
        while f[pos] != need or v[pos] <= prev_val:
            pos += 1
        rows.append(pos)
        prev_val = v[pos]
        pos += 1
    return tuple(rows)


def _feasible_anchor(dm: DiffMatrix, anchor_rows: Sequence[int]) -> tuple:
    """Largest subset of anchor rows whose offsets are nondecreasing.

    A strictly increasing value subsequence is not automatically extendable to
    a full window-respecting mapping; nondecreasing offsets s = value - row
    are. Longest nondecreasing subsequence, earliest rows on ties.
    """
    rows = list(anchor_rows)
    s = [int(dm.best_index[r]) - r for r in rows]
    k = len(rows)
    if k == 0:
        return ()
    f = [1] * k  # longest nondecreasing run starting at position i
    for i in range(k - 2, -1, -1):
        f[i] = 1 + max((f[j] for j in range(i + 1, k) if s[j] >= s[i]), default=0)
    length = max(f)
    keep = []
    prev = -1
    pos = 0
    for need in range(length, 0, -1):
        while f[pos] != need or s[pos] < prev:
            pos += 1
        keep.append(rows[pos])
        prev = s[pos]
        pos += 1
    return tuple(keep)


def _segments(n: int, d: int, anchor_rows: Sequence[int], anchor_s: Sequence[int]):
    """Free-row segments between fixed anchors, with their offset bounds."""
    segs = []
    bounds = [(-1, 0)] + list(zip(anchor_rows, anchor_s)) + [(n, d)]
    for (r0, s0), (r1, s1) in zip(bounds, bounds[1:]):
        free = list(range(r0 + 1, r1))
        if free:
            segs.append((free, s0, s1))
    return segs


def _fitness(dm: DiffMatrix, s: np.ndarray) -> float:
    return float(np.mean(dm.psnr[np.arange(dm.n), s]))


def refine_with_ga(
    dm: DiffMatrix,
    anchor_rows: Sequence[int],
    ga: GAConfig = DEFAULT_GA,
) -> Alignment:
    """Search window-respecting mappings by seeded mutation with elitism.

    The initial population is guided: every individual starts from the
    (feasible subset of) LIS anchor rows at their best-PSNR matches, with the
    remaining rows randomized within the offset bounds the anchors impose.
    Mutation resamples any row, so a misleading anchor can still be escaped.
    """
    n, d = dm.n, dm.d
    anchors = _feasible_anchor(dm, anchor_rows)
    anchor_s = [int(dm.best_index[r]) - r for r in anchors]
    base = np.zeros(n, dtype=np.int64)
    for r, sv in zip(anchors, anchor_s):
        base[r] = sv
    segs = _segments(n, d, anchors, anchor_s)

    if not segs:  # anchor already covers every row; nothing to refine
        mapping = tuple(int(base[i]) + i for i in range(n))
        return _alignment_from_mapping(dm, mapping, METHOD_GA)

    rng = np.random.default_rng(ga.seed)

    def random_individual() -> np.ndarray:
        s = base.copy()
        for free, lo, hi in segs:
            vals = np.sort(rng.integers(lo, hi + 1, size=len(free)))
            s[free] = vals
        return s

    def mutate(s: np.ndarray) -> np.ndarray:
        out = s.copy()
        for row in range(n):
            if rng.random() >= ga.mutation_rate:
                continue
            out[row] = rng.integers(0, d + 1)
            # clamp neighbors to restore the nondecreasing-offset invariant
            for p in range(row - 1, -1, -1):
                if out[p] > out[p + 1]:
                    out[p] = out[p + 1]
            for p in range(row + 1, n):
                if out[p] < out[p - 1]:
                    out[p] = out[p - 1]
        return out

    population = [random_individual() for _ in range(ga.population_size)]
    scores = [_fitness(dm, s) for s in population]
    best_idx = int(np.argmax(scores))
    best, best_score = population[best_idx].copy(), scores[best_idx]

    for _ in range(ga.generations):
        parents = [population[rng.integers(len(population))] for _ in range(ga.population_size - 1)]
        population = [best.copy()] + [mutate(p) for p in parents]
        scores = [_fitness(dm, s) for s in population]
        gen_best = int(np.argmax(scores))
        if scores[gen_best] > best_score:
            best, best_score = population[gen_best].copy(), scores[gen_best]

    mapping = tuple(int(best[i]) + i for i in range(n))
    return _alignment_from_mapping(dm, mapping, METHOD_GA)


def _alignment_from_mapping(dm: DiffMatrix, mapping: Sequence[int], method: str) -> Alignment:
    missing = tuple(sorted(set(range(dm.m)) - set(mapping)))
    s = np.asarray([r - i for i, r in enumerate(mapping)])
    return Alignment(
        mapping=tuple(mapping),
        missing=missing,
        chunk_lengths=chunks_from_missing(missing),
        method=method,
        fitness=_fitness(dm, s),
    )


def identify_dropped_frames(
    reference: VideoSequence,
    distorted: VideoSequence,
    cfg: MetricConfig = DEFAULT_CONFIG,
    ga: GAConfig = DEFAULT_GA,
) -> Alignment:
    """Full identification pipeline: trivial, LIS fast path, or GA refinement."""
    m, n = len(reference), len(distorted)
    if m < n:
        raise AlignmentError(f"distorted sequence longer than reference (m={m} < n={n})")
    if m == n:
        fitness = float(np.mean([psnr(reference[i], distorted[i], cfg) for i in range(n)]))
        return Alignment(
            mapping=tuple(range(n)),
            missing=(),
            chunk_lengths=(),
            method=METHOD_TRIVIAL,
            fitness=fitness,
        )
    dm = build_diff_matrix(reference, distorted, cfg)
    lis_rows = lis_of_best_indices(dm)
    if len(lis_rows) == n:
        return _alignment_from_mapping(dm, [int(r) for r in dm.best_index], METHOD_EXACT_LIS)
    return refine_with_ga(dm, lis_rows, ga)
