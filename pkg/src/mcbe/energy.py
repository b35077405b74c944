"""Encoding, storage and transmission energy of a set of encoded rungs.

Storage energy follows ``E_sto = S_d * P_b * T_s`` (bits x W/bit x hours =
Wh). Encoding and transmission energy are linear stand-in models:
joules per encoded luma pixel per codec, and joules per transmitted bit
times the expected delivery count. Only the baseline-vs-optimized deltas are
meaningful; the default coefficients are placeholders, not measurements.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import EnergyError
from .ladder import Rung

UNITS = {"E_enc": "J", "S": "bits", "E_sto": "Wh", "E_tra": "J"}
CSV_HEADER = ("scenario", "E_enc_J", "S_bits", "E_sto_Wh", "E_tra_J")


@dataclass(frozen=True)
class EnergyParams:
    P_b: float = 1e-9
    T_s: float = 24.0
    e_enc: Mapping[str, float] = field(default_factory=dict)
    e_tx: float = 1e-7
    deliveries: float = 1.0
    seg_seconds: float = 4.0
    fps: float = 30.0

    def __post_init__(self):
        scalars = {k: getattr(self, k) for k in ("P_b", "T_s", "e_tx", "deliveries")}
        scalars.update({f"e_enc[{k}]": v for k, v in self.e_enc.items()})
        for name, v in scalars.items():
            if not (math.isfinite(v) and v >= 0):
                raise EnergyError(f"energy parameter {name} must be finite and >= 0, got {v}")
        if not self.seg_seconds > 0 or not self.fps > 0:
            raise EnergyError("seg_seconds and fps must be positive")

    @classmethod
    def from_dict(cls, d: Mapping) -> "EnergyParams":
        known = {"P_b", "T_s", "e_enc", "e_tx", "deliveries", "seg_seconds", "fps"}
        extra = set(d) - known - {"comment"}
        if extra:
            raise EnergyError(f"unknown energy parameter(s): {', '.join(sorted(extra))}")
        kw = {k: d[k] for k in known if k in d}
        if "e_enc" in kw:
            kw["e_enc"] = {str(k): float(v) for k, v in kw["e_enc"].items()}
        for k in known - {"e_enc"}:
            if k in kw:
                kw[k] = float(kw[k])
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "EnergyParams":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as e:
            raise EnergyError(f"{path}: invalid JSON ({e})") from None


def storage_energy(size_bits: float, P_b: float, T_s: float) -> float:
    """Watt-hours to keep ``size_bits`` stored for ``T_s`` hours at ``P_b`` W/bit."""
    if size_bits < 0 or P_b < 0 or T_s < 0:
        raise EnergyError("storage_energy inputs must be non-negative")
    return size_bits * P_b * T_s


def ladder_size(rungs: Sequence[Rung], seg_seconds: float) -> float:
    if seg_seconds <= 0:
        raise EnergyError("seg_seconds must be positive")
    return float(sum(r.bitrate for r in rungs) * seg_seconds)


def encoding_energy(rungs: Sequence[Rung], params: EnergyParams, fps: float | None = None) -> float:
    fps = params.fps if fps is None else fps
    total = 0.0
    for r in rungs:
        try:
            coeff = params.e_enc[r.codec]
        except KeyError:
            raise EnergyError(f"no encoding-energy coefficient for codec {r.codec!r}") from None
        total += coeff * r.resolution.pixels * fps * params.seg_seconds
    return total


@dataclass(frozen=True)
class ScenarioEnergy:
    E_enc: float
    S: float
    E_sto: float
    E_tra: float


def scenario_energy(rungs: Sequence[Rung], params: EnergyParams) -> ScenarioEnergy:
    size = ladder_size(rungs, params.seg_seconds)
    return ScenarioEnergy(
        E_enc=encoding_energy(rungs, params),
        S=size,
        E_sto=storage_energy(size, params.P_b, params.T_s),
        E_tra=size * params.e_tx * params.deliveries,
    )


def percent_delta(base: float, opt: float, name: str) -> float:
    if not base > 0:
        raise EnergyError(f"baseline {name} is zero; relative change is undefined")
    return (opt - base) / base * 100.0


@dataclass(frozen=True)
class EnergyReport:
    baseline: ScenarioEnergy
    optimized: ScenarioEnergy
    deltas: Mapping[str, float]

    def to_dict(self) -> dict:
        return {
            "units": dict(UNITS, deltas="%"),
            "baseline": asdict(self.baseline),
            "optimized": asdict(self.optimized),
            "deltas": {f"d{k}": round(v, 2) for k, v in self.deltas.items()},
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for name, s in (("baseline", self.baseline), ("optimized", self.optimized)):
                w.writerow((name, f"{s.E_enc:.6f}", f"{s.S:.6f}", f"{s.E_sto:.6f}", f"{s.E_tra:.6f}"))
            d = self.deltas
            w.writerow(("deltas",) + tuple(f"{d[k]:.2f}" for k in ("E_enc", "S", "E_sto", "E_tra")))

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def report(baseline: Sequence[Rung], optimized: Sequence[Rung], params: EnergyParams) -> EnergyReport:
    """Compare the rungs a baseline ladder would encode with an optimized selection."""
    base = scenario_energy(baseline, params)
    opt = scenario_energy(optimized, params)
    deltas = {k: percent_delta(getattr(base, k), getattr(opt, k), k) for k in UNITS}
    return EnergyReport(base, opt, deltas)
