"""Bitrate-ladder domain types, validation and the ladder JSON format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import LadderError

ABOVE_VMAX = "above_vmax"
BELOW_JND = "below_jnd"
BELOW_BASELINE_RD = "below_baseline_rd"
REASONS = (ABOVE_VMAX, BELOW_JND, BELOW_BASELINE_RD)


@dataclass(frozen=True, order=True)
class Codec:
    id: str
    priority: int

    def __post_init__(self):
        if not self.id:
            raise LadderError("codec id must be non-empty")
        if self.priority < 0:
            raise LadderError(f"codec {self.id!r}: priority must be >= 0")


@dataclass(frozen=True)
class Resolution:
    width: int
    height: int
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise LadderError(f"resolution {self.width}x{self.height}: dimensions must be positive")
        if self.width % 2 or self.height % 2:
            raise LadderError(f"resolution {self.width}x{self.height}: dimensions must be even")

    @property
    def name(self) -> str:
        return self.label or f"{self.height}p"

    @property
    def key(self) -> str:
        return f"{self.width}x{self.height}"

    @property
    def pixels(self) -> int:
        return self.width * self.height

    @classmethod
    def parse(cls, text: str) -> "Resolution":
        """Parse ``"1920x1080"`` or one of the HLS labels such as ``"1080p"``."""
        text = text.strip()
        if text in HLS_RESOLUTIONS:
            return HLS_RESOLUTIONS[text]
        try:
            w, h = text.lower().split("x")
            return cls(int(w), int(h))
        except ValueError:
            raise LadderError(f"cannot parse resolution {text!r}") from None


HLS_RESOLUTIONS = {
    r.label: r
    for r in (
        Resolution(640, 360, "360p"),
        Resolution(768, 432, "432p"),
        Resolution(960, 540, "540p"),
        Resolution(1280, 720, "720p"),
        Resolution(1920, 1080, "1080p"),
        Resolution(2560, 1440, "1440p"),
        Resolution(3840, 2160, "2160p"),
    )
}


@dataclass(frozen=True)
class Rung:
    codec: str
    resolution: Resolution
    bitrate: int
    predicted_vmaf: float | None = None

    def __post_init__(self):
        if isinstance(self.bitrate, bool) or int(self.bitrate) != self.bitrate:
            raise LadderError(f"{self.codec} rung: bitrate must be an integer (bits/s), got {self.bitrate!r}")
        object.__setattr__(self, "bitrate", int(self.bitrate))
        if self.bitrate <= 0:
            raise LadderError(f"{self.codec} rung: bitrate must be positive, got {self.bitrate}")
        if self.predicted_vmaf is not None and not 0.0 <= self.predicted_vmaf <= 100.0:
            raise LadderError(
                f"{self.codec} rung at {self.bitrate} bps: vmaf {self.predicted_vmaf} outside [0, 100]"
            )

    @property
    def identity(self) -> tuple[str, int, int, int]:
        """Key identifying the representation independent of its prediction."""
        return (self.codec, self.resolution.width, self.resolution.height, self.bitrate)

    def with_vmaf(self, vmaf: float) -> "Rung":
        return replace(self, predicted_vmaf=float(vmaf))

    def to_dict(self) -> dict:
        d = {
            "codec": self.codec,
            "width": self.resolution.width,
            "height": self.resolution.height,
            "bitrate_bps": self.bitrate,
        }
        if self.resolution.label:
            d["label"] = self.resolution.label
        if self.predicted_vmaf is not None:
            d["vmaf"] = self.predicted_vmaf
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Rung":
        try:
            vmaf = d.get("vmaf")
            return cls(
                codec=str(d["codec"]),
                resolution=Resolution(int(d["width"]), int(d["height"]), d.get("label")),
                bitrate=d["bitrate_bps"],
                predicted_vmaf=None if vmaf is None else float(vmaf),
            )
        except KeyError as e:
            raise LadderError(f"rung entry missing field {e.args[0]!r}: {dict(d)}") from None


@dataclass(frozen=True)
class MultiCodecLadder:
    """Per-codec rung lists plus the codec priority order (baseline first).

    Construct through :func:`validate_ladder` (or :meth:`build`) to get the
    ordering and uniqueness guarantees the elimination steps rely on.
    """

    codecs: tuple[Codec, ...]
    rungs: Mapping[str, tuple[Rung, ...]]

    @property
    def baseline(self) -> Codec:
        return self.codecs[0]

    def codec_ids(self) -> list[str]:
        return [c.id for c in self.codecs]

    def all_rungs(self) -> list[Rung]:
        return [r for c in self.codecs for r in self.rungs.get(c.id, ())]

    def map_rungs(self, fn) -> "MultiCodecLadder":
        return MultiCodecLadder(
            self.codecs, {cid: tuple(fn(r) for r in rs) for cid, rs in self.rungs.items()}
        )

    @classmethod
    def build(cls, codecs: Iterable[Codec], rungs: Iterable[Rung]) -> "MultiCodecLadder":
        codecs = tuple(codecs)
        grouped: dict[str, list[Rung]] = {c.id: [] for c in codecs}
        for r in rungs:
            if r.codec not in grouped:
                raise LadderError(f"rung references unknown codec {r.codec!r}")
            grouped[r.codec].append(r)
        return validate_ladder(cls(codecs, {k: tuple(v) for k, v in grouped.items()}))

    def to_dict(self) -> dict:
        return {
            "codecs": [{"id": c.id, "priority": c.priority} for c in self.codecs],
            "rungs": [r.to_dict() for r in self.all_rungs()],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MultiCodecLadder":
        if "codecs" not in d or "rungs" not in d:
            raise LadderError("ladder JSON needs top-level 'codecs' and 'rungs'")
        codecs = []
        for c in d["codecs"]:
            try:
                codecs.append(Codec(str(c["id"]), int(c["priority"])))
            except KeyError as e:
                raise LadderError(f"codec entry missing field {e.args[0]!r}") from None
        return cls.build(codecs, (Rung.from_dict(r) for r in d["rungs"]))


def validate_ladder(ladder: MultiCodecLadder) -> MultiCodecLadder:
    """Check ladder invariants; return a copy with rungs sorted by bitrate.

    Raises LadderError on an empty codec list, non-contiguous or duplicate
    priorities, duplicate codec ids, rungs filed under the wrong codec, an
    empty codec, or a repeated bitrate within one codec.
    """
    if not ladder.codecs:
        raise LadderError("ladder has no codecs")
    codecs = tuple(sorted(ladder.codecs, key=lambda c: c.priority))
    ids = [c.id for c in codecs]
    if len(set(ids)) != len(ids):
        raise LadderError(f"duplicate codec ids in {ids}")
    if [c.priority for c in codecs] != list(range(len(codecs))):
        raise LadderError(
            f"codec priorities must be unique and contiguous from 0, got {[c.priority for c in codecs]}"
        )
    unknown = set(ladder.rungs) - set(ids)
    if unknown:
        raise LadderError(f"rungs reference unknown codec(s): {', '.join(sorted(unknown))}")

    rungs = {}
    for cid in ids:
        rs = list(ladder.rungs.get(cid, ()))
        if not rs:
            raise LadderError(f"codec {cid!r} has no rungs")
        for r in rs:
            if r.codec != cid:
                raise LadderError(f"rung for codec {r.codec!r} filed under {cid!r}")
        rs.sort(key=lambda r: r.bitrate)
        for a, b in zip(rs, rs[1:]):
            if a.bitrate == b.bitrate:
                raise LadderError(f"codec {cid!r}: duplicate bitrate {a.bitrate} bps")
        rungs[cid] = tuple(rs)
    return MultiCodecLadder(codecs, rungs)


@dataclass(frozen=True)
class OptimizedLadder:
    """Result of redundant-representation elimination.

    ``retained`` is the selected set in codec-priority then bitrate order;
    ``eliminated`` pairs every dropped rung with the rule that removed it.
    """

    codecs: tuple[Codec, ...]
    retained: tuple[Rung, ...]
    eliminated: tuple[tuple[Rung, str], ...]
    segment_id: str | None = None
    jnd: float | None = None
    vmax: float | None = None

    def __post_init__(self):
        for r in self.retained:
            if r.predicted_vmaf is None:
                raise LadderError(f"retained rung {r.identity} has no predicted vmaf")
        for _, reason in self.eliminated:
            if reason not in REASONS:
                raise LadderError(f"unknown elimination reason {reason!r}")

    def retained_ids(self) -> set:
        return {r.identity for r in self.retained}

    def encode_plan(self) -> dict[str, list[dict]]:
        """Selected (resolution, bitrate) pairs to encode, grouped per codec."""
        plan: dict[str, list[dict]] = {c.id: [] for c in self.codecs}
        for r in self.retained:
            plan[r.codec].append(
                {"width": r.resolution.width, "height": r.resolution.height, "bitrate_bps": r.bitrate}
            )
        return plan

    def to_dict(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "jnd": self.jnd,
            "vmax": self.vmax,
            "codecs": [{"id": c.id, "priority": c.priority} for c in self.codecs],
            "retained": [r.to_dict() for r in self.retained],
            "eliminated": [dict(r.to_dict(), reason=reason) for r, reason in self.eliminated],
            "encode_plan": self.encode_plan(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "OptimizedLadder":
        try:
            return cls(
                codecs=tuple(Codec(str(c["id"]), int(c["priority"])) for c in d["codecs"]),
                retained=tuple(Rung.from_dict(r) for r in d["retained"]),
                eliminated=tuple((Rung.from_dict(r), r["reason"]) for r in d["eliminated"]),
                segment_id=d.get("segment_id"),
                jnd=d.get("jnd"),
                vmax=d.get("vmax"),
            )
        except KeyError as e:
            raise LadderError(f"optimized ladder JSON missing field {e.args[0]!r}") from None


def dump_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def load_ladder(path: str | Path) -> MultiCodecLadder:
    return MultiCodecLadder.from_dict(_read_json(path))


def load_rung_set(path: str | Path) -> list[Rung]:
    """Rungs that would be encoded: a full ladder JSON or the retained set of an optimized one."""
    d = _read_json(path)
    if "retained" in d:
        return list(OptimizedLadder.from_dict(d).retained)
    return MultiCodecLadder.from_dict(d).all_rungs()


def _read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise LadderError(f"{path}: invalid JSON ({e})") from None


def rungs_by_codec(rungs: Sequence[Rung]) -> dict[str, list[Rung]]:
    out: dict[str, list[Rung]] = {}
    for r in rungs:
        out.setdefault(r.codec, []).append(r)
    return out
