"""Redundant-representation elimination over a multi-codec ladder.

Step 1 prunes each codec's ladder on its own: rungs above the perceptually
lossless ceiling ``vmax`` go, and so do rungs that improve on the last kept
rung by less than one JND. Step 2 keeps every surviving baseline rung and
drops any newer-codec rung that does not sit strictly above the baseline's
piecewise-linear RD curve at the same bitrate.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import LadderError
from .features import SegmentFeatures
from .forest import ModelBank, predict_ladder
from .ladder import (ABOVE_VMAX, BELOW_BASELINE_RD, BELOW_JND, MultiCodecLadder, OptimizedLadder,
                     Rung)

# (v_J, v_max) pairs used in industry practice
STANDARD_CONFIGS = ((2.0, 98.0), (4.0, 96.0), (6.0, 94.0))


@dataclass(frozen=True)
class EliminationConfig:
    jnd: float = 6.0
    vmax: float = 94.0
    # Compare each rung with its literal predecessor rather than the last kept rung.
    literal_step1: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.jnd) and self.jnd > 0):
            raise ValueError(f"JND threshold must be > 0, got {self.jnd}")
        if not 0 < self.vmax <= 100:
            raise ValueError(f"vmax must be in (0, 100], got {self.vmax}")
        if self.jnd >= self.vmax:
            raise ValueError(f"JND threshold {self.jnd} must be below vmax {self.vmax}")

    @classmethod
    def for_jnd(cls, jnd: float) -> "EliminationConfig":
        """Config with the vmax that conventionally pairs with ``jnd`` (2/98, 4/96, 6/94)."""
        for j, v in STANDARD_CONFIGS:
            if j == jnd:
                return cls(j, v)
        raise ValueError(f"no standard vmax for JND {jnd}; pass vmax explicitly")


@dataclass(frozen=True)
class RdPoint:
    bitrate: float
    vmaf: float


def _vmaf(r: Rung) -> float:
    if r.predicted_vmaf is None:
        raise LadderError(f"rung {r.identity} has no predicted vmaf")
    return r.predicted_vmaf


def step1_jnd_prune(rungs: Sequence[Rung], cfg: EliminationConfig
                    ) -> tuple[list[Rung], list[tuple[Rung, str]]]:
    """Prune one codec's ascending-bitrate ladder.

    The first rung is always kept and is never checked against vmax.
    """
    vmafs = [_vmaf(r) for r in rungs]
    if not rungs:
        return [], []
    retained = [rungs[0]]
    eliminated = []
    anchor = vmafs[0]
    for t in range(1, len(rungs)):
        v = vmafs[t]
        if cfg.literal_step1:
            anchor = vmafs[t - 1]
        if v > cfg.vmax:
            eliminated.append((rungs[t], ABOVE_VMAX))
        elif v - anchor < cfg.jnd:
            eliminated.append((rungs[t], BELOW_JND))
        else:
            retained.append(rungs[t])
            anchor = v
    return retained, eliminated


def interpolate_rd(curve: Sequence[RdPoint], b: float) -> float:
    """VMAF of the piecewise-linear RD curve at bitrate ``b``.

    Between curve points the bracketing pair (nearest bitrate at or below
    ``b``, nearest at or above) is joined linearly. Past the top of the curve
    the last VMAF is carried flat. Below the first point the curve is
    undefined and ``-inf`` is returned, so every rung there counts as above it.
    """
    if not curve:
        raise LadderError("RD curve is empty")
    rates = [p.bitrate for p in curve]
    if b < rates[0]:
        return -math.inf
    if b >= rates[-1]:
        return curve[-1].vmaf
    j = bisect.bisect_left(rates, b)
    if rates[j] == b:
        return curve[j].vmaf
    lo, hi = curve[j - 1], curve[j]
    return (hi.vmaf - lo.vmaf) / (hi.bitrate - lo.bitrate) * (b - lo.bitrate) + lo.vmaf


def rd_curve(rungs: Sequence[Rung]) -> list[RdPoint]:
    return [RdPoint(float(r.bitrate), _vmaf(r)) for r in rungs]


def step2_cross_codec_prune(ladder: MultiCodecLadder, cfg: EliminationConfig | None = None
                            ) -> OptimizedLadder:
    """Gate every non-baseline rung on the baseline codec's RD curve.

    ``ladder`` holds the Step 1 survivors; non-baseline codecs may be empty.
    Ties with the curve are eliminated.
    """
    base = ladder.baseline.id
    base_rungs = list(ladder.rungs.get(base, ()))
    if not base_rungs:
        raise LadderError(f"baseline codec {base!r} has no rungs")
    curve = rd_curve(base_rungs)
    retained = list(base_rungs)
    eliminated = []
    for codec in ladder.codecs[1:]:
        for r in ladder.rungs.get(codec.id, ()):
            if _vmaf(r) > interpolate_rd(curve, r.bitrate):
                retained.append(r)
            else:
                eliminated.append((r, BELOW_BASELINE_RD))
    return OptimizedLadder(
        ladder.codecs, tuple(retained), tuple(eliminated),
        jnd=cfg.jnd if cfg else None, vmax=cfg.vmax if cfg else None,
    )


def eliminate(ladder: MultiCodecLadder, cfg: EliminationConfig,
              segment_id: str | None = None) -> OptimizedLadder:
    """Run both steps on a ladder whose rungs already carry predicted VMAF."""
    survivors = {}
    step1_out: dict[str, list] = {}
    for codec in ladder.codecs:
        kept, dropped = step1_jnd_prune(ladder.rungs.get(codec.id, ()), cfg)
        survivors[codec.id] = tuple(kept)
        step1_out[codec.id] = dropped
    step2 = step2_cross_codec_prune(MultiCodecLadder(ladder.codecs, survivors), cfg)

    step2_out: dict[str, list] = {}
    for r, reason in step2.eliminated:
        step2_out.setdefault(r.codec, []).append((r, reason))
    eliminated = []
    for codec in ladder.codecs:
        dropped = step1_out[codec.id] + step2_out.get(codec.id, [])
        eliminated += sorted(dropped, key=lambda e: e[0].bitrate)
    return OptimizedLadder(ladder.codecs, step2.retained, tuple(eliminated),
                           segment_id=segment_id, jnd=cfg.jnd, vmax=cfg.vmax)


def estimate_ladder(ladder: MultiCodecLadder, features: SegmentFeatures, bank: ModelBank,
                    cfg: EliminationConfig | None = None) -> OptimizedLadder:
    """Predict VMAF for every rung of ``ladder`` and eliminate redundant ones."""
    cfg = cfg or EliminationConfig()
    predicted = predict_ladder(bank, ladder, features)
    return eliminate(predicted, cfg, segment_id=features.segment_id or None)


def write_rd_csv(path: str | Path, result: OptimizedLadder) -> None:
    """One row per rung: ``codec,bitrate_bps,vmaf,retained`` for RD plotting."""
    kept = result.retained_ids()
    rows = list(result.retained) + [r for r, _ in result.eliminated]
    prio = {c.id: c.priority for c in result.codecs}
    rows.sort(key=lambda r: (prio[r.codec], r.bitrate))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("codec", "bitrate_bps", "vmaf", "retained"))
        for r in rows:
            w.writerow((r.codec, r.bitrate, f"{r.predicted_vmaf:.6f}", int(r.identity in kept)))
