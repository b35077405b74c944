"""HLS master playlist for the retained representations."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from .ladder import OptimizedLadder, Rung

# RFC 6381 strings for common profiles; unknown codec ids are passed through verbatim.
DEFAULT_CODEC_STRINGS = {
    "avc": "avc1.640028",
    "h264": "avc1.640028",
    "x264": "avc1.640028",
    "hevc": "hvc1.1.6.L120.90",
    "h265": "hvc1.1.6.L120.90",
    "x265": "hvc1.1.6.L120.90",
    "av1": "av01.0.08M.08",
    "svtav1": "av01.0.08M.08",
    "vp9": "vp09.00.40.08",
    "vvc": "vvc1.1.L123.CQA",
}


def variant_uri(r: Rung) -> str:
    return f"{r.codec}/{r.resolution.height}p_{r.bitrate}.m3u8"


def master_playlist(result: OptimizedLadder, codec_strings: Mapping[str, str] | None = None) -> str:
    strings = dict(DEFAULT_CODEC_STRINGS, **(codec_strings or {}))
    lines = ["#EXTM3U", "#EXT-X-VERSION:6", "#EXT-X-INDEPENDENT-SEGMENTS"]
    for r in result.retained:
        attrs = (
            f"BANDWIDTH={r.bitrate}",
            f"RESOLUTION={r.resolution.width}x{r.resolution.height}",
            f'CODECS="{strings.get(r.codec, r.codec)}"',
        )
        lines.append("#EXT-X-STREAM-INF:" + ",".join(attrs))
        lines.append(variant_uri(r))
    return "\n".join(lines) + "\n"


def write_playlist(path: str | Path, result: OptimizedLadder,
                   codec_strings: Mapping[str, str] | None = None) -> None:
    Path(path).write_text(master_playlist(result, codec_strings))
