"""Distortion synthesis: seeded frame-drop plans and bitplane noise.

Drop plans are parameterized by a case label (how long chunks are and how
many frames go in total, as percentage bands of the reference length) and
a possibility label (what the content looks like around and inside each
chunk, operationalized with an SSIM threshold):

  P1  boundary frames similar, every interior frame similar to a boundary
  P2  boundary frames similar, some interior frame unlike both boundaries
  P3  boundary frames dissimilar, every interior frame similar to the left
  P4  boundary frames dissimilar, some interior frame unlike the left

Spatial distortion overwrites one bitplane of every luma sample with seeded
pseudorandom bits: bit 0 for mild, bit 3 for strong degradation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import PlanError
from .frame_metrics import DEFAULT_CONFIG, MetricConfig, ssim
from .video_io import Frame, VideoSequence

CASE_LABELS = ("2.1", "2.2", "2.3", "2.4")
POSSIBILITY_LABELS = (1, 2, 3, 4)

# (cfd_low_pct, cfd_high_pct, tdf_low_pct, tdf_high_pct) per case
_CASE_BANDS = {
    "2.1": ((1, 5), (1, 10)),
    "2.2": ((1, 5), (11, 20)),
    "2.3": ((6, 10), (1, 10)),
    "2.4": ((6, 10), (11, 20)),
}


@dataclass(frozen=True)
class DropPlan:
    """Which reference indices to drop: disjoint chunks away from the edges."""

    m: int
    chunks: Tuple[Tuple[int, int], ...]  # (start, length), sorted
    case_label: str
    possibility_label: Optional[int]
    seed: int

    def __post_init__(self) -> None:
        if self.case_label not in _CASE_BANDS:
            raise PlanError(f"unknown case label {self.case_label!r}")
        if self.possibility_label is not None and self.possibility_label not in POSSIBILITY_LABELS:
            raise PlanError(f"unknown possibility label {self.possibility_label!r}")
        prev_end = 0
        for start, length in self.chunks:
            if length < 1:
                raise PlanError(f"chunk at {start} has non-positive length {length}")
            if start < 1 or start + length > self.m - 1:
                raise PlanError(
                    f"chunk ({start},{length}) touches index 0 or {self.m - 1}; "
                    "boundary frames must survive"
                )
            if start <= prev_end:
                raise PlanError("chunks must be sorted, disjoint, and non-adjacent")
            prev_end = start + length

    @property
    def dropped_indices(self) -> Tuple[int, ...]:
        out = []
        for start, length in self.chunks:
            out.extend(range(start, start + length))
        return tuple(out)

    @property
    def cfd_pct(self) -> float:
        return 100.0 * max((l for _, l in self.chunks), default=0) / self.m

    @property
    def tdf_pct(self) -> float:
        return 100.0 * sum(l for _, l in self.chunks) / self.m

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "chunks": [[start, length] for start, length in self.chunks],
            "case": self.case_label,
            "possibility": self.possibility_label,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DropPlan":
        return cls(
            m=int(data["m"]),
            chunks=tuple((int(s), int(l)) for s, l in data["chunks"]),
            case_label=str(data["case"]),
            possibility_label=None if data.get("possibility") is None else int(data["possibility"]),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class SpatialSpec:
    """Which luma bitplane to overwrite with random payload bits."""

    bitplane: int  # 0 (LSB) or 3 (4th LSB)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.bitplane not in (0, 3):
            raise PlanError(f"bitplane must be 0 or 3, got {self.bitplane}")


def case_bands_frames(case_label: str, m: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """Frame-count bands ((cfd_lo, cfd_hi), (tdf_lo, tdf_hi)) for a case.

    Percent bands are converted with ceil/floor; unsatisfiable bands on short
    sequences collapse to the nearest achievable count with a warning.
    """
    if case_label not in _CASE_BANDS:
        raise PlanError(f"unknown case label {case_label!r}")
    (cfd_lo_p, cfd_hi_p), (tdf_lo_p, tdf_hi_p) = _CASE_BANDS[case_label]

    def band(lo_pct: int, hi_pct: int) -> Tuple[int, int]:
        lo = max(1, math.ceil(lo_pct * m / 100.0))
        hi = math.floor(hi_pct * m / 100.0)
        if hi < lo:
            warnings.warn(
                f"case {case_label} band {lo_pct}-{hi_pct}% unsatisfiable at m={m}; "
                f"using nearest achievable count {lo}",
                stacklevel=3,
            )
            hi = lo
        return lo, hi

    return band(cfd_lo_p, cfd_hi_p), band(tdf_lo_p, tdf_hi_p)


class FrameSimilarity:
    """SSIM between reference frames, memoized; shared across plan searches."""

    def __init__(self, reference: VideoSequence, cfg: MetricConfig = DEFAULT_CONFIG):
        self.reference = reference
        self.cfg = cfg
        self._cache: Dict[Tuple[int, int], float] = {}

    def __call__(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        if i == j:
            return 1.0
        key = (i, j)
        val = self._cache.get(key)
        if val is None:
            val = ssim(self.reference[i], self.reference[j], self.cfg)
            self._cache[key] = val
        return val


def classify_site(
    sim: FrameSimilarity,
    start: int,
    length: int,
    threshold: float,
) -> int:
    """Possibility label (1-4) of dropping [start, start+length) here."""
    left = start - 1
    right = start + length
    boundary_similar = sim(left, right) >= threshold
    if boundary_similar:
        interior_ok = all(
            sim(left, t) >= threshold or sim(t, right) >= threshold
            for t in range(start, right)
        )
        return 1 if interior_ok else 2
    interior_ok = all(sim(left, t) >= threshold for t in range(start, right))
    return 3 if interior_ok else 4


def plan_drops(
    reference: VideoSequence,
    case_label: str,
    possibility_label: Optional[int],
    seed: int,
    sim_threshold: float = 0.9,
    cfg: MetricConfig = DEFAULT_CONFIG,
    similarity: Optional[FrameSimilarity] = None,
) -> DropPlan:
    """Draw a seeded drop plan satisfying the case bands and possibility.

    Chunk lengths are sampled inside the cfd band until the total lands in
    the tdf band; each chunk is then placed uniformly among the sites whose
    classification matches the requested possibility (any site when the
    possibility is unconstrained). Deterministic given the seed.
    """
    m = len(reference)
    (cfd_lo, cfd_hi), (tdf_lo, tdf_hi) = case_bands_frames(case_label, m)
    if cfd_hi > m - 2:
        raise PlanError(f"sequence of {m} frames too short for case {case_label} chunks")
    rng = np.random.default_rng(seed)
    sim = similarity if similarity is not None else FrameSimilarity(reference, cfg)

    lengths = []
    total = 0
    while total < tdf_lo:
        cap = min(cfd_hi, tdf_hi - total)
        if cap < cfd_lo:
            break  # tdf band head-room exhausted; nearest achievable total
        length = int(rng.integers(cfd_lo, cap + 1))
        lengths.append(length)
        total += length
    lengths.sort(reverse=True)  # place large chunks first while sites are plentiful

    chunks: list = []

    def free(start: int, length: int) -> bool:
        # keep at least one surviving frame between chunks so runs stay maximal
        return all(start + length < s or start > s + l for s, l in chunks)

    for length in lengths:
        candidates = [
            s for s in range(1, m - length) if free(s, length)
        ]
        rng.shuffle(candidates)
        placed = False
        for s in candidates:
            if possibility_label is None or classify_site(sim, s, length, sim_threshold) == possibility_label:
                chunks.append((s, length))
                placed = True
                break
        if not placed:
            counts = {p: 0 for p in POSSIBILITY_LABELS}
            for s in candidates:
                counts[classify_site(sim, s, length, sim_threshold)] += 1
            raise PlanError(
                f"no qualifying site for possibility {possibility_label} "
                f"(chunk length {length}, case {case_label}); "
                f"qualifying sites per possibility: {counts}"
            )
    return DropPlan(
        m=m,
        chunks=tuple(sorted(chunks)),
        case_label=case_label,
        possibility_label=possibility_label,
        seed=seed,
    )


def drop_frames(reference: VideoSequence, plan: DropPlan) -> VideoSequence:
    """Apply a plan: remove the planned indices, preserving order."""
    if plan.m != len(reference):
        raise PlanError(f"plan is for m={plan.m} but sequence has {len(reference)} frames")
    dropped = set(plan.dropped_indices)
    frames = [f for i, f in enumerate(reference) if i not in dropped]
    return reference.with_frames(frames)


def _embed_plane(luma: np.ndarray, bitplane: int, rng: np.random.Generator) -> np.ndarray:
    bits = rng.integers(0, 2, size=luma.shape, dtype=np.uint8)
    mask = np.uint8(1 << bitplane)
    return (luma & ~mask) | (bits << bitplane)


def embed_bitplane(video: VideoSequence, spec: SpatialSpec) -> VideoSequence:
    """Replace the chosen luma bit of every sample with seeded random bits.

    Each frame gets an independent substream keyed by (seed, frame index),
    so results do not depend on evaluation order. Chroma is untouched.
    """
    frames = []
    for idx, frame in enumerate(video):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(idx,)))
        luma = _embed_plane(frame.luma, spec.bitplane, rng)
        if frame.has_chroma:
            frames.append(Frame(luma=luma, chroma_u=frame.chroma_u, chroma_v=frame.chroma_v))
        else:
            frames.append(Frame(luma=luma))
    return video.with_frames(frames)
