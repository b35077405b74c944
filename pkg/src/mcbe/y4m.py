"""YUV4MPEG2 reading/writing and fixed-duration segmentation of luma frames."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .errors import Y4MError

MAGIC = b"YUV4MPEG2"
# 8-bit 4:2:0 variants; they differ only in chroma siting, which is irrelevant for luma.
SUPPORTED_COLORSPACES = {"420", "420jpeg", "420paldv", "420mpeg2"}
_MAX_HEADER = 4096


@dataclass(frozen=True, eq=False)
class Frame:
    width: int
    height: int
    luma: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        if self.luma.shape != (self.height, self.width):
            raise Y4MError(
                f"frame {self.frame_index}: luma shape {self.luma.shape} != ({self.height}, {self.width})"
            )


@dataclass(frozen=True, eq=False)
class Segment:
    frames: tuple[Frame, ...]
    fps: float
    segment_id: str

    def __post_init__(self):
        if not self.frames:
            raise Y4MError(f"segment {self.segment_id!r} has no frames")
        if self.fps <= 0:
            raise Y4MError(f"segment {self.segment_id!r}: fps must be positive")
        w, h = self.frames[0].width, self.frames[0].height
        for f in self.frames:
            if (f.width, f.height) != (w, h):
                raise Y4MError(f"segment {self.segment_id!r}: mixed frame sizes")

    def __len__(self):
        return len(self.frames)

    def luma_stack(self) -> np.ndarray:
        return np.stack([f.luma for f in self.frames])


@dataclass(frozen=True)
class Y4MHeader:
    width: int
    height: int
    fps: Fraction
    colorspace: str = "420jpeg"

    @property
    def frame_bytes(self) -> int:
        cw, ch = (self.width + 1) // 2, (self.height + 1) // 2
        return self.width * self.height + 2 * cw * ch


def _read_line(stream: BinaryIO, what: str) -> bytes | None:
    buf = bytearray()
    while True:
        c = stream.read(1)
        if not c:
            if not buf:
                return None
            raise Y4MError(f"unterminated {what} line")
        if c == b"\n":
            return bytes(buf)
        buf += c
        if len(buf) > _MAX_HEADER:
            raise Y4MError(f"{what} line too long")


def read_header(stream: BinaryIO) -> Y4MHeader:
    line = _read_line(stream, "stream header")
    if line is None:
        raise Y4MError("empty stream: missing YUV4MPEG2 header")
    tokens = line.split(b" ")
    if tokens[0] != MAGIC:
        raise Y4MError(f"bad magic {tokens[0][:16]!r}, expected {MAGIC!r}")

    width = height = None
    fps = None
    colorspace = "420jpeg"
    for tok in tokens[1:]:
        if not tok:
            continue
        tag, value = chr(tok[0]), tok[1:].decode("ascii", "replace")
        try:
            if tag == "W":
                width = int(value)
            elif tag == "H":
                height = int(value)
            elif tag == "F":
                num, den = value.split(":")
                fps = Fraction(int(num), int(den))
            elif tag == "C":
                colorspace = value
        except (ValueError, ZeroDivisionError):
            raise Y4MError(f"malformed header tag {tok!r}") from None
    if not width or not height or width <= 0 or height <= 0:
        raise Y4MError("header lacks positive W and H tags")
    if fps is None:
        raise Y4MError("header lacks F (frame rate) tag")
    if fps <= 0:
        raise Y4MError(f"non-positive frame rate {fps}")
    if colorspace not in SUPPORTED_COLORSPACES:
        raise Y4MError(f"unsupported colorspace C{colorspace}; only 8-bit 4:2:0 is accepted")
    return Y4MHeader(width, height, fps, colorspace)


class Y4MReader:
    """Iterate frames of a Y4M stream; the header is parsed on construction."""

    def __init__(self, stream: BinaryIO):
        self.stream = stream
        self.header = read_header(stream)

    def __iter__(self) -> Iterator[Frame]:
        hdr = self.header
        luma_size = hdr.width * hdr.height
        index = 0
        while True:
            line = _read_line(self.stream, f"frame {index} marker")
            if line is None:
                return
            if not (line == b"FRAME" or line.startswith(b"FRAME ")):
                raise Y4MError(f"frame {index}: expected FRAME marker, got {line[:16]!r}")
            payload = self.stream.read(hdr.frame_bytes)
            if len(payload) < hdr.frame_bytes:
                raise Y4MError(
                    f"frame {index}: truncated payload ({len(payload)} of {hdr.frame_bytes} bytes)"
                )
            luma = np.frombuffer(payload, dtype=np.uint8, count=luma_size).reshape(hdr.height, hdr.width)
            yield Frame(hdr.width, hdr.height, luma, index)
            index += 1


def parse_y4m(stream: BinaryIO) -> Iterator[Frame]:
    return iter(Y4MReader(stream))


def write_y4m(stream: BinaryIO, frames: Iterable[Frame], fps: Fraction | int = 30,
              chroma_value: int = 128) -> None:
    """Write 8-bit C420jpeg Y4M. Chroma planes are filled with ``chroma_value``."""
    frames = iter(frames)
    first = next(frames, None)
    if first is None:
        raise Y4MError("write_y4m needs at least one frame to know the dimensions")
    fps = Fraction(fps)
    hdr = Y4MHeader(first.width, first.height, fps)
    stream.write(b"YUV4MPEG2 W%d H%d F%d:%d Ip A1:1 C420jpeg\n"
                 % (hdr.width, hdr.height, fps.numerator, fps.denominator))
    chroma = bytes([chroma_value]) * (hdr.frame_bytes - hdr.width * hdr.height)
    for f in (first, *frames):
        if (f.width, f.height) != (hdr.width, hdr.height):
            raise Y4MError("all frames written to one stream must share dimensions")
        stream.write(b"FRAME\n")
        stream.write(np.ascontiguousarray(f.luma, dtype=np.uint8).tobytes())
        stream.write(chroma)


def segment_stream(frames: Iterable[Frame], fps: float, seg_seconds: float = 4.0,
                   prefix: str = "seg") -> Iterator[Segment]:
    """Group frames into consecutive segments of ceil(fps * seg_seconds) frames.

    A trailing partial segment is yielded as-is. Segment ids are
    ``{prefix}_s000``, ``{prefix}_s001``, ...
    """
    if fps <= 0 or seg_seconds <= 0:
        raise ValueError("fps and seg_seconds must be positive")
    size = math.ceil(float(fps) * seg_seconds - 1e-9)
    batch: list[Frame] = []
    n = 0
    for f in frames:
        batch.append(f)
        if len(batch) == size:
            yield Segment(tuple(batch), float(fps), f"{prefix}_s{n:03d}")
            batch = []
            n += 1
    if batch:
        yield Segment(tuple(batch), float(fps), f"{prefix}_s{n:03d}")
