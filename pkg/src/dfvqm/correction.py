"""Concealment: rebuild a temporally aligned corrected sequence.

Dropped positions are filled from surviving frames by one of three
strategies: repeat the last non-dropped frame (default), fill the whole
chunk with the average of its two boundary frames, or average forward
frame-by-frame toward the next non-dropped frame.
"""

from __future__ import annotations

import enum
import warnings
from typing import Optional

import numpy as np

from .alignment import Alignment, chunk_starts
from .errors import GeometryError
from .video_io import Frame, VideoSequence


class ConcealmentStrategy(str, enum.Enum):
    REPEAT_LAST = "repeat_last"
    ADJACENT_AVERAGE = "adjacent_average"
    CONTIGUOUS_AVERAGE = "contiguous_average"


def _average(a: Frame, b: Frame) -> Frame:
    """Per-sample mean of two frames, round-half-up integer arithmetic."""
    def avg(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return ((x.astype(np.uint16) + y.astype(np.uint16) + 1) // 2).astype(np.uint8)

    if a.has_chroma:
        return Frame(
            luma=avg(a.luma, b.luma),
            chroma_u=avg(a.chroma_u, b.chroma_u),
            chroma_v=avg(a.chroma_v, b.chroma_v),
        )
    return Frame(luma=avg(a.luma, b.luma))


def construct_corrected(
    distorted: VideoSequence,
    alignment: Alignment,
    strategy: ConcealmentStrategy = ConcealmentStrategy.REPEAT_LAST,
) -> VideoSequence:
    """Build the length-m corrected sequence from V_D and its alignment.

    Non-dropped positions carry the matched distorted frames unchanged. A
    chunk at the sequence head or tail lacks one boundary; the single
    existing boundary frame is substituted and a warning is emitted.
    """
    if len(distorted) != alignment.n:
        raise GeometryError(
            f"alignment covers {alignment.n} frames but distorted sequence has {len(distorted)}"
        )
    strategy = ConcealmentStrategy(strategy)
    m = alignment.m
    slots: list = [None] * m
    for i, r in enumerate(alignment.mapping):
        slots[r] = distorted[i]

    for start, length in zip(chunk_starts(alignment.missing, alignment.chunk_lengths),
                             alignment.chunk_lengths):
        prev: Optional[Frame] = slots[start - 1] if start > 0 else None
        nxt: Optional[Frame] = slots[start + length] if start + length < m else None
        if prev is None or nxt is None:
            warnings.warn(
                f"chunk at {start} (length {length}) touches the sequence boundary; "
                "using the single existing boundary frame",
                stacklevel=2,
            )
        if strategy is ConcealmentStrategy.REPEAT_LAST:
            fill = prev if prev is not None else nxt
            for t in range(start, start + length):
                slots[t] = fill
        elif strategy is ConcealmentStrategy.ADJACENT_AVERAGE:
            left = prev if prev is not None else nxt
            right = nxt if nxt is not None else prev
            fill = _average(left, right)
            for t in range(start, start + length):
                slots[t] = fill
        else:  # CONTIGUOUS_AVERAGE: sequential within the chunk by definition
            cur = prev if prev is not None else nxt
            target = nxt if nxt is not None else prev
            for t in range(start, start + length):
                cur = _average(cur, target)
                slots[t] = cur

    return VideoSequence(
        frames=tuple(slots),
        frame_rate=distorted.frame_rate,
        source_name=distorted.source_name,
    )
