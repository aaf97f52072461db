"""Spatial, temporal, and combined degradation scoring.

SD is the mean per-frame SSIM over non-dropped positions. TD accumulates,
per chunk of contiguously dropped frames, a length weight times the average
of two penalties: c1, dissimilarity of the frames flanking the chunk, and
c2, residual dissimilarity of the concealed frames against the reference.
The overall index is SD - TD.

Two c2 variants are provided. "full_chunk" (default) averages over every
dropped position in the chunk, so perfect concealment yields TD = 0.
"literal" drops the chunk's first position from the sum while keeping the
chunk length as divisor, which pins c2 = 1 for single-frame chunks; it is
kept selectable because it is a defensible alternative reading.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .alignment import Alignment, DEFAULT_GA, GAConfig, chunk_starts, identify_dropped_frames
from .correction import ConcealmentStrategy, construct_corrected
from .errors import GeometryError
from .frame_metrics import DEFAULT_CONFIG, MetricConfig, psnr, ssim
from .video_io import VideoSequence

VARIANT_FULL_CHUNK = "full_chunk"
VARIANT_LITERAL = "literal"
_VARIANTS = (VARIANT_FULL_CHUNK, VARIANT_LITERAL)


@dataclass(frozen=True)
class ChunkContribution:
    start: int          # first dropped reference index of the chunk
    length: int
    c1: float
    c2: float
    weight: float       # length / m
    contribution: float  # weight * (c1 + c2) / 2


@dataclass(frozen=True)
class QualityReport:
    sd: float
    td: float
    dfvqmi: float
    chunks: Tuple[ChunkContribution, ...]
    mean_psnr_nondropped: float
    m: int
    n: int
    d: int
    eq2_variant: str
    method: str

    def to_dict(self) -> dict:
        return {
            "sd": self.sd,
            "td": self.td,
            "dfvqmi": self.dfvqmi,
            "variant": self.eq2_variant,
            "chunks": [
                {
                    "start": c.start,
                    "len": c.length,
                    "c1": c.c1,
                    "c2": c.c2,
                    "contribution": c.contribution,
                }
                for c in self.chunks
            ],
            "m": self.m,
            "n": self.n,
        }


def spatial_distortion(
    reference: VideoSequence,
    corrected: VideoSequence,
    missing: Sequence[int],
    cfg: MetricConfig = DEFAULT_CONFIG,
) -> float:
    """Mean SSIM over the non-dropped positions (all positions when no drops)."""
    m = len(reference)
    if len(corrected) != m:
        raise GeometryError(
            f"corrected length {len(corrected)} differs from reference length {m}"
        )
    dropped = set(missing)
    kept = [i for i in range(m) if i not in dropped]
    if len(kept) != m - len(dropped):
        raise GeometryError("missing indices out of range or duplicated")
    return float(np.mean([ssim(reference[i], corrected[i], cfg) for i in kept]))


def temporal_distortion(
    reference: VideoSequence,
    corrected: VideoSequence,
    missing: Sequence[int],
    chunk_lengths: Sequence[int],
    cfg: MetricConfig = DEFAULT_CONFIG,
    variant: str = VARIANT_FULL_CHUNK,
) -> Tuple[float, Tuple[ChunkContribution, ...]]:
    """Weighted per-chunk temporal penalty and its per-chunk breakdown."""
    if variant not in _VARIANTS:
        raise ValueError(f"unknown eq2 variant {variant!r}")
    if sum(chunk_lengths) != len(missing):
        raise GeometryError("chunk_lengths inconsistent with missing")
    m = len(reference)
    chunks = []
    for start, length in zip(chunk_starts(tuple(missing), chunk_lengths), chunk_lengths):
        left = start - 1
        right = start + length
        if left < 0 or right >= m:
            warnings.warn(
                f"chunk at {start} touches the sequence boundary; "
                "c1 uses the single existing boundary frame",
                stacklevel=2,
            )
            boundary = right if left < 0 else left
            left = right = boundary
        c1 = 1.0 - ssim(corrected[left], corrected[right], cfg)

        if variant == VARIANT_FULL_CHUNK:
            positions = range(start, start + length)
        else:
            positions = range(start + 1, start + length)
        total = sum(ssim(reference[t], corrected[t], cfg) for t in positions)
        c2 = 1.0 - total / length

        weight = length / m
        contribution = weight * (c1 + c2) / 2.0
        chunks.append(
            ChunkContribution(
                start=start, length=length, c1=c1, c2=c2,
                weight=weight, contribution=contribution,
            )
        )
    td = float(sum(c.contribution for c in chunks))
    return td, tuple(chunks)


def score_with_alignment(
    reference: VideoSequence,
    corrected: VideoSequence,
    alignment: Alignment,
    cfg: MetricConfig = DEFAULT_CONFIG,
    variant: str = VARIANT_FULL_CHUNK,
) -> QualityReport:
    """Score an already-corrected sequence against the reference."""
    sd = spatial_distortion(reference, corrected, alignment.missing, cfg)
    td, chunks = temporal_distortion(
        reference, corrected, alignment.missing, alignment.chunk_lengths, cfg, variant
    )
    dropped = set(alignment.missing)
    kept = [i for i in range(alignment.m) if i not in dropped]
    mean_psnr = float(np.mean([psnr(reference[i], corrected[i], cfg) for i in kept]))
    return QualityReport(
        sd=sd,
        td=td,
        dfvqmi=sd - td,
        chunks=chunks,
        mean_psnr_nondropped=mean_psnr,
        m=alignment.m,
        n=alignment.n,
        d=alignment.d,
        eq2_variant=variant,
        method=alignment.method,
    )


def dfvqmi(
    reference: VideoSequence,
    distorted: VideoSequence,
    cfg: MetricConfig = DEFAULT_CONFIG,
    ga: GAConfig = DEFAULT_GA,
    strategy: ConcealmentStrategy = ConcealmentStrategy.REPEAT_LAST,
    variant: str = VARIANT_FULL_CHUNK,
    alignment: Optional[Alignment] = None,
) -> QualityReport:
    """Full pipeline: align, conceal, then score.

    A precomputed alignment may be supplied to skip the identification step.
    """
    if alignment is None:
        alignment = identify_dropped_frames(reference, distorted, cfg, ga)
    corrected = construct_corrected(distorted, alignment, strategy)
    return score_with_alignment(reference, corrected, alignment, cfg, variant)
