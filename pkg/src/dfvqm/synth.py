"""Seeded synthetic test clips with controllable temporal structure.

Clips are smooth noise textures that morph continuously between random
targets at per-segment rates, like camera/object motion in natural video:
nearby frames are almost identical, and similarity decays with temporal
distance at a speed set by the segment's morph period. Slow segments give
long runs of mutually similar frames; fast segments make even close frames
dissimilar; out-and-back excursions (morph toward a new texture, then
return) produce flash-like patterns where a span's endpoints match but its
middle does not. Because concealment error grows with distance from the
surviving boundary frame, dropping one long run of frames from these clips
hurts more than dropping the same number of frames in short runs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from .video_io import Frame, VideoSequence


def _smooth_texture(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Band-limited random texture, float64, mean 128, std ~40."""
    field = gaussian_filter(rng.normal(size=(height, width)), sigma=3.0, mode="wrap")
    sd = field.std()
    if sd < 1e-9:
        sd = 1.0
    return 128.0 + 40.0 * (field - field.mean()) / sd


def make_scene_clip(
    width: int,
    height: int,
    n_frames: int,
    seed: int,
    period_range: Tuple[float, float] = (30.0, 90.0),
    segment_frames: Tuple[int, int] = (12, 45),
    excursion_prob: float = 0.3,
    excursion_frames: Tuple[int, int] = (4, 14),
    excursion_depth: Tuple[float, float] = (0.35, 0.55),
    jitter: float = 1.5,
    frame_rate: Fraction = Fraction(25, 1),
    source_name: Optional[str] = None,
) -> VideoSequence:
    """Generate a clip that drifts between textures at mixed speeds.

    period_range bounds the per-segment morph period (frames to cover the
    full distance to the target, log-uniform): short periods are fast
    motion, long periods near-static content. With excursion_prob a
    segment heads to a new texture and then turns back, so both endpoints
    of the excursion match while its interior does not.
    """
    rng = np.random.default_rng(seed)
    lo_p, hi_p = period_range
    current = _smooth_texture(rng, height, width)
    frames: list = []

    def emit_toward(target: np.ndarray, period: float, duration: int) -> None:
        nonlocal current
        step = (target - current) / period
        for _ in range(min(duration, n_frames - len(frames))):
            current = current + step
            noise = rng.normal(scale=jitter, size=(height, width))
            frames.append(Frame(luma=np.clip(current + noise, 0, 255).astype(np.uint8)))

    while len(frames) < n_frames:
        period = float(np.exp(rng.uniform(np.log(lo_p), np.log(hi_p))))
        if rng.random() < excursion_prob:
            # out-and-back flash; depth scales with the away leg so the per-frame
            # change rate stays bounded and short flashes still leave the origin
            origin = current.copy()
            away = int(rng.integers(excursion_frames[0], excursion_frames[1] + 1))
            depth = rng.uniform(excursion_depth[0], excursion_depth[1])
            emit_toward(_smooth_texture(rng, height, width), away / depth, away)
            emit_toward(origin, float(away), away)
        else:
            duration = int(rng.integers(segment_frames[0], segment_frames[1] + 1))
            emit_toward(_smooth_texture(rng, height, width), period, duration)
    name = source_name if source_name is not None else f"scene_clip_{seed}"
    return VideoSequence(frames=tuple(frames), frame_rate=frame_rate, source_name=name)


def make_noise_clip(
    width: int,
    height: int,
    n_frames: int,
    seed: int,
    frame_rate: Fraction = Fraction(25, 1),
) -> VideoSequence:
    """Independent noise per frame: all frames pairwise distinct and dissimilar."""
    rng = np.random.default_rng(seed)
    frames = tuple(
        Frame(luma=rng.integers(0, 256, size=(height, width), dtype=np.uint8))
        for _ in range(n_frames)
    )
    return VideoSequence(frames=frames, frame_rate=frame_rate, source_name=f"noise_clip_{seed}")


def make_static_clip(
    width: int,
    height: int,
    n_frames: int,
    seed: int = 0,
    frame_rate: Fraction = Fraction(25, 1),
) -> VideoSequence:
    """All frames identical (one noise texture)."""
    rng = np.random.default_rng(seed)
    luma = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    frames = tuple(Frame(luma=luma) for _ in range(n_frames))
    return VideoSequence(frames=frames, frame_rate=frame_rate, source_name=f"static_clip_{seed}")
