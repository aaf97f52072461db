import numpy as np
import pytest

from dfvqm.video_io import Frame, VideoSequence


def const_frame(value, size=16):
    return Frame(luma=np.full((size, size), value, dtype=np.uint8))


def noise_frame(rng, size=16):
    return Frame(luma=rng.integers(0, 256, size=(size, size), dtype=np.uint8))


def noise_sequence(rng, n_frames, size=16):
    return VideoSequence(frames=tuple(noise_frame(rng, size) for _ in range(n_frames)))


def subsequence(video, kept_indices):
    return video.with_frames([video[i] for i in kept_indices])


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
