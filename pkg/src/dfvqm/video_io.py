"""Raw video I/O: YUV4MPEG2 (y4m) and headerless planar YUV 4:2:0.

Sequences are immutable once constructed; readers never fabricate samples
and writers round-trip bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import BinaryIO, Iterable, Optional

import numpy as np

from .errors import FormatError, GeometryError

_Y4M_SIGNATURE = b"YUV4MPEG2"
_FRAME_MARKER = b"FRAME"

# 4:2:0 colorspace tags sharing the same plane layout, plus mono (luma only).
_C420_TAGS = {"420", "420jpeg", "420mpeg2", "420paldv"}
_MONO_TAGS = {"mono"}


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.uint8)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Frame:
    """One decoded picture: a luma plane plus optional 4:2:0 chroma planes."""

    luma: np.ndarray
    chroma_u: Optional[np.ndarray] = None
    chroma_v: Optional[np.ndarray] = None
    bit_depth: int = 8

    def __post_init__(self) -> None:
        if self.bit_depth != 8:
            raise GeometryError(f"only 8-bit video is supported, got bit_depth={self.bit_depth}")
        luma = np.asarray(self.luma)
        if luma.ndim != 2 or luma.size == 0:
            raise GeometryError(f"luma plane must be a non-empty 2-D array, got shape {luma.shape}")
        object.__setattr__(self, "luma", _readonly(luma))
        if (self.chroma_u is None) != (self.chroma_v is None):
            raise GeometryError("chroma planes must be both present or both absent")
        if self.chroma_u is not None:
            h, w = luma.shape
            if h % 2 or w % 2:
                raise GeometryError(f"chroma requires even geometry, got {w}x{h}")
            for name in ("chroma_u", "chroma_v"):
                plane = np.asarray(getattr(self, name))
                if plane.shape != (h // 2, w // 2):
                    raise GeometryError(
                        f"{name} must be {w // 2}x{h // 2}, got shape {plane.shape[::-1]}"
                    )
                object.__setattr__(self, name, _readonly(plane))

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    @property
    def has_chroma(self) -> bool:
        return self.chroma_u is not None

    def same_geometry(self, other: "Frame") -> bool:
        return (
            self.luma.shape == other.luma.shape
            and self.bit_depth == other.bit_depth
            and self.has_chroma == other.has_chroma
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        if not self.same_geometry(other):
            return False
        if not np.array_equal(self.luma, other.luma):
            return False
        if self.has_chroma:
            return np.array_equal(self.chroma_u, other.chroma_u) and np.array_equal(
                self.chroma_v, other.chroma_v
            )
        return True

    def __hash__(self) -> int:
        return hash((self.luma.shape, self.luma.tobytes()))


@dataclass(frozen=True, eq=False)
class VideoSequence:
    """Ordered frames with shared geometry; rate and name are metadata."""

    frames: tuple
    frame_rate: Fraction = Fraction(25, 1)
    source_name: str = ""

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        if not frames:
            raise GeometryError("a sequence needs at least one frame")
        first = frames[0]
        for i, f in enumerate(frames):
            if not f.same_geometry(first):
                raise GeometryError(f"frame {i} geometry differs from frame 0")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_rate", Fraction(self.frame_rate))
        if self.frame_rate <= 0:
            raise GeometryError(f"frame rate must be positive, got {self.frame_rate}")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> Frame:
        return self.frames[i]

    def __iter__(self):
        return iter(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def has_chroma(self) -> bool:
        return self.frames[0].has_chroma

    def __eq__(self, other: object) -> bool:
        # source_name is a label, not content; equality is sample-for-sample.
        if not isinstance(other, VideoSequence):
            return NotImplemented
        return self.frame_rate == other.frame_rate and self.frames == other.frames

    def __hash__(self) -> int:
        return hash((len(self.frames), self.frame_rate))

    def with_frames(self, frames: Iterable[Frame], source_name: Optional[str] = None) -> "VideoSequence":
        return VideoSequence(
            frames=tuple(frames),
            frame_rate=self.frame_rate,
            source_name=self.source_name if source_name is None else source_name,
        )


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    buf = stream.read(n)
    return buf if buf is not None else b""


def _read_line(stream: BinaryIO, what: str, limit: int = 1024) -> bytes:
    """Read bytes up to (excluding) the next 0x0A."""
    out = bytearray()
    while True:
        ch = stream.read(1)
        if not ch:
            raise FormatError(f"unexpected end of stream while reading {what}")
        if ch == b"\n":
            return bytes(out)
        out += ch
        if len(out) > limit:
            raise FormatError(f"{what} exceeds {limit} bytes without terminator")


def _plane_sizes(width: int, height: int, mono: bool) -> tuple:
    csize = 0 if mono else (width // 2) * (height // 2)
    return width * height, csize


def read_y4m(stream: BinaryIO, source_name: str = "") -> VideoSequence:
    """Parse a YUV4MPEG2 stream into an immutable sequence.

    Only 4:2:0 colorspace variants and mono are accepted.
    """
    head = _read_exact(stream, len(_Y4M_SIGNATURE))
    if head != _Y4M_SIGNATURE:
        raise FormatError("malformed signature: stream does not start with YUV4MPEG2")
    params = _read_line(stream, "stream header").decode("ascii", errors="replace")

    width = height = None
    rate = Fraction(25, 1)
    ctag = "420jpeg"  # y4m default when C is absent
    for tok in params.split():
        key, val = tok[0], tok[1:]
        try:
            if key == "W":
                width = int(val)
            elif key == "H":
                height = int(val)
            elif key == "F":
                num, den = val.split(":")
                rate = Fraction(int(num), int(den))
            elif key == "C":
                ctag = val
            # I, A, X parameters carry no information we use
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"bad header parameter {tok!r}") from exc
    if not width or not height or width <= 0 or height <= 0:
        raise FormatError("header missing valid W/H parameters")

    if ctag in _MONO_TAGS:
        mono = True
    elif ctag in _C420_TAGS:
        mono = False
        if width % 2 or height % 2:
            raise FormatError(f"colorspace C{ctag} requires even geometry, got {width}x{height}")
    else:
        raise FormatError(f"unsupported colorspace tag C{ctag} (4:2:0 or mono only)")

    ysize, csize = _plane_sizes(width, height, mono)
    frames = []
    while True:
        marker = _read_exact(stream, len(_FRAME_MARKER))
        if not marker:
            break
        if marker != _FRAME_MARKER:
            raise FormatError(f"expected FRAME marker at frame {len(frames)}, got {marker!r}")
        _read_line(stream, f"frame {len(frames)} header")  # frame-level params ignored
        payload = _read_exact(stream, ysize + 2 * csize)
        if len(payload) != ysize + 2 * csize:
            raise FormatError(
                f"truncated frame payload at frame {len(frames)}: "
                f"got {len(payload)} of {ysize + 2 * csize} bytes"
            )
        luma = np.frombuffer(payload, dtype=np.uint8, count=ysize).reshape(height, width)
        if mono:
            frames.append(Frame(luma=luma))
        else:
            u = np.frombuffer(payload, dtype=np.uint8, count=csize, offset=ysize)
            v = np.frombuffer(payload, dtype=np.uint8, count=csize, offset=ysize + csize)
            frames.append(
                Frame(
                    luma=luma,
                    chroma_u=u.reshape(height // 2, width // 2),
                    chroma_v=v.reshape(height // 2, width // 2),
                )
            )
    if not frames:
        raise FormatError("stream contains no frames")
    return VideoSequence(frames=tuple(frames), frame_rate=rate, source_name=source_name)


def read_raw_yuv(
    stream: BinaryIO,
    width: int,
    height: int,
    layout: str = "I420",
    frame_rate: Fraction = Fraction(25, 1),
    source_name: str = "",
) -> VideoSequence:
    """Slice a headerless planar byte stream into frames.

    layout is "I420" (Y + quarter-size U, V) or "luma_only".
    """
    if width <= 0 or height <= 0:
        raise GeometryError(f"zero-size geometry {width}x{height}")
    if layout not in ("I420", "luma_only"):
        raise FormatError(f"unknown layout {layout!r} (expected I420 or luma_only)")
    mono = layout == "luma_only"
    if not mono and (width % 2 or height % 2):
        raise GeometryError(f"I420 requires even geometry, got {width}x{height}")
    ysize, csize = _plane_sizes(width, height, mono)
    frame_size = ysize + 2 * csize

    data = stream.read()
    if not data or len(data) % frame_size:
        raise FormatError(
            f"stream length {len(data)} is not a positive multiple of frame size {frame_size}"
        )
    frames = []
    for off in range(0, len(data), frame_size):
        luma = np.frombuffer(data, dtype=np.uint8, count=ysize, offset=off).reshape(height, width)
        if mono:
            frames.append(Frame(luma=luma))
        else:
            u = np.frombuffer(data, dtype=np.uint8, count=csize, offset=off + ysize)
            v = np.frombuffer(data, dtype=np.uint8, count=csize, offset=off + ysize + csize)
            frames.append(
                Frame(
                    luma=luma,
                    chroma_u=u.reshape(height // 2, width // 2),
                    chroma_v=v.reshape(height // 2, width // 2),
                )
            )
    return VideoSequence(frames=tuple(frames), frame_rate=frame_rate, source_name=source_name)


def write_y4m(video: VideoSequence, stream: BinaryIO) -> None:
    """Serialize a sequence; read_y4m(write_y4m(v)) == v bit-exactly."""
    ctag = "420jpeg" if video.has_chroma else "mono"
    rate = video.frame_rate
    header = f"YUV4MPEG2 W{video.width} H{video.height} F{rate.numerator}:{rate.denominator} C{ctag}\n"
    stream.write(header.encode("ascii"))
    for frame in video:
        stream.write(_FRAME_MARKER)
        stream.write(b"\n")
        stream.write(frame.luma.tobytes())
        if frame.has_chroma:
            stream.write(frame.chroma_u.tobytes())
            stream.write(frame.chroma_v.tobytes())
