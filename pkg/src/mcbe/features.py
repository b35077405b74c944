"""DCT-energy spatio-temporal complexity features.

Each frame is tiled into 32x32 luma blocks (edge-replicated at the right and
bottom borders). A block's texture energy is the exponentially weighted sum
of its absolute AC coefficients::

    H = sum_{(i,j) != (0,0)} exp(|i*j / w**2 - 1|) * |X[i, j]|

Per segment:

* ``E_Y`` -- mean block energy, normalised by ``w**2``
* ``h``   -- mean absolute change of block energy between consecutive frames,
  same normalisation, 0 for single-frame segments
* ``L_Y`` -- mean luma sample value
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import FeatureError
from .y4m import Segment

BLOCK = 32
FEATURE_NAMES = ("E_Y", "h", "L_Y")


@dataclass(frozen=True)
class SegmentFeatures:
    E_Y: float
    h: float
    L_Y: float
    segment_id: str = ""

    def __post_init__(self):
        for name in FEATURE_NAMES:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise FeatureError(f"{self.segment_id}: feature {name} is not finite ({v})")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.E_Y, self.h, self.L_Y)


@lru_cache(maxsize=None)
def dct_matrix(w: int = BLOCK) -> np.ndarray:
    """Orthonormal DCT-II basis; row k holds basis function k."""
    n = np.arange(w)
    m = np.cos(np.pi * (2 * n[None, :] + 1) * n[:, None] / (2 * w)) * math.sqrt(2.0 / w)
    m[0] /= math.sqrt(2.0)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def energy_weights(w: int = BLOCK) -> np.ndarray:
    i = np.arange(w, dtype=np.float64)
    wt = np.exp(np.abs(np.outer(i, i) / (w * w) - 1.0))
    wt[0, 0] = 0.0  # DC excluded
    wt.setflags(write=False)
    return wt


def dct2d(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of a square block (or a stack of them on the last two axes)."""
    block = np.asarray(block, dtype=np.float64)
    w = block.shape[-1]
    if block.shape[-2] != w:
        raise FeatureError(f"dct2d expects square blocks, got {block.shape[-2:]}")
    c = dct_matrix(w)
    # Transform the zero-mean block and set DC = w * mean directly, so flat
    # blocks give exactly-zero AC terms instead of rounding residue.
    mean = block.mean(axis=(-2, -1), keepdims=True)
    out = c @ (block - mean) @ c.T
    out[..., 0, 0] = w * mean[..., 0, 0]
    return out


def block_texture_energy(coeffs: np.ndarray) -> np.ndarray | float:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    w = coeffs.shape[-1]
    wt = energy_weights(w).reshape(-1)
    flat = np.abs(coeffs).reshape(coeffs.shape[:-2] + (w * w,))
    out = flat @ wt
    return float(out) if out.ndim == 0 else out


def pad_to_blocks(plane: np.ndarray, w: int = BLOCK) -> np.ndarray:
    h, wd = plane.shape
    ph, pw = -h % w, -wd % w
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def frame_block_energies(luma: np.ndarray, w: int = BLOCK) -> np.ndarray:
    """Texture energy of every w x w block of one luma plane, shape (rows, cols)."""
    plane = pad_to_blocks(np.asarray(luma, dtype=np.float64), w)
    rows, cols = plane.shape[0] // w, plane.shape[1] // w
    blocks = plane.reshape(rows, w, cols, w).transpose(0, 2, 1, 3)
    return block_texture_energy(dct2d(blocks))


def features_from_planes(planes: Sequence[np.ndarray], segment_id: str = "",
                         w: int = BLOCK) -> SegmentFeatures:
    """Features of a sequence of luma planes (uint8 or real-valued)."""
    if len(planes) == 0:
        raise FeatureError(f"segment {segment_id!r} is empty")
    energies = []
    luma_sum = 0.0
    n_samples = 0
    for p in planes:
        p = np.asarray(p)
        energies.append(frame_block_energies(p, w))
        luma_sum += float(p.sum(dtype=np.float64))
        n_samples += p.size
    e = np.stack(energies)
    n_frames, n_blocks = e.shape[0], e[0].size
    norm = w * w
    e_y = float(e.sum() / (n_frames * n_blocks * norm))
    if n_frames > 1:
        h = float(np.abs(np.diff(e, axis=0)).sum() / ((n_frames - 1) * n_blocks * norm))
    else:
        h = 0.0
    return SegmentFeatures(e_y, h, luma_sum / n_samples, segment_id)


def segment_features(segment: Segment) -> SegmentFeatures:
    return features_from_planes([f.luma for f in segment.frames], segment.segment_id)


def write_features_csv(dest: str | Path | TextIO, rows: Iterable[SegmentFeatures]) -> None:
    """Write ``segment_id,E_Y,h,L_Y`` rows to a path or an open text stream."""
    if hasattr(dest, "write"):
        _write_features(dest, rows)
    else:
        with open(dest, "w", newline="") as fh:
            _write_features(fh, rows)


def _write_features(fh: TextIO, rows: Iterable[SegmentFeatures]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("segment_id",) + FEATURE_NAMES)
    for f in rows:
        w.writerow((f.segment_id, f"{f.E_Y:.6f}", f"{f.h:.6f}", f"{f.L_Y:.6f}"))


def read_features_csv(path: str | Path) -> list[SegmentFeatures]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"segment_id", *FEATURE_NAMES} - set(reader.fieldnames or ())
        if missing:
            raise FeatureError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(SegmentFeatures(
                    float(row["E_Y"]), float(row["h"]), float(row["L_Y"]), row["segment_id"]))
            except ValueError as e:
                raise FeatureError(f"{path}:{lineno}: {e}") from None
    return out
