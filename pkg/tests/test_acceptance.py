"""Exit criteria for the build, one test per criterion.

Each test records a one-line PASS/FAIL verdict, printed in the pytest
terminal summary under "acceptance criteria". Set MCBE_REGEN_GOLDEN=1 to
rewrite the golden files used by criterion 9.
"""

import os
import time
import warnings

import numpy as np
import pytest

from mcbe.cli import main as cli_main
from mcbe.eliminate import STANDARD_CONFIGS, EliminationConfig, estimate_ladder, step1_jnd_prune
from mcbe.energy import EnergyParams, report, storage_energy
from mcbe.features import dct2d, features_from_planes
from mcbe.features import SegmentFeatures
from mcbe.forest import (DecisionTree, ForestModel, Hyperparameters, ModelBank, fit_forest,
                         load_bank, save_bank)
from mcbe.ladder import Rung, load_ladder

from conftest import DATA, GOLDEN, RES_720, random_ladder, record_acceptance
from oracles import dct_direct_kernel, lookup_tree, naive_select, synthetic_rd_surface

SEED = 20240601


def _lookup_bank(ladder):
    """Bank whose per-codec model reproduces each rung's VMAF from its bitrate alone."""
    bank = ModelBank()
    for cid, rungs in ladder.rungs.items():
        arrays = lookup_tree([r.bitrate for r in rungs], [r.predicted_vmaf for r in rungs])
        tree = DecisionTree(*(np.asarray(a, dtype=dt) for a, dt in
                              zip(arrays, (np.int64, np.float64, np.int64, np.int64, np.float64))))
        bank.add(cid, RES_720, ForestModel((tree,), Hyperparameters(n_estimators=1)))
    return bank


def _strip(ladder):
    return ladder.map_rungs(lambda r: Rung(r.codec, r.resolution, r.bitrate))


@pytest.fixture(scope="module")
def randomized_cases():
    """1000 randomized (ladder with VMAF, config, estimate_ladder result) cases."""
    rng = np.random.default_rng(SEED)
    cases = []
    start = time.perf_counter()
    for i in range(1000):
        lad = random_ladder(rng, monotone=bool(i % 2))
        cfg = EliminationConfig(*STANDARD_CONFIGS[i % 3])
        out = estimate_ladder(_strip(lad), SegmentFeatures(10.0, 2.0, 120.0, f"r{i}"),
                              _lookup_bank(lad), cfg)
        cases.append((lad, cfg, out))
    return cases, time.perf_counter() - start


def test_c01_oracle_equivalence(randomized_cases):
    cases, elapsed = randomized_cases
    mismatches = 0
    for lad, cfg, out in cases:
        rows = [(r.codec, r.bitrate, r.predicted_vmaf) for r in lad.all_rungs()]
        want, _ = naive_select(rows, lad.codec_ids(), cfg.jnd, cfg.vmax)
        mismatches += {(r.codec, r.bitrate) for r in out.retained} != want
    ok = mismatches == 0 and elapsed < 10.0
    record_acceptance(1, ok, f"elimination oracle equivalence: {mismatches} mismatches / {len(cases)} "
                             f"ladders, {elapsed:.2f}s (< 10s)")
    assert mismatches == 0
    assert elapsed < 10.0


def test_c02_jnd_monotonicity():
    rng = np.random.default_rng(SEED + 2)
    violations = 0
    for _ in range(100):
        lad = random_ladder(rng, monotone=True)
        for cid, rungs in lad.rungs.items():
            counts = [len(step1_jnd_prune(rungs, EliminationConfig(j, v))[0]) for j, v in STANDARD_CONFIGS]
            violations += any(b > a for a, b in zip(counts, counts[1:]))
    record_acceptance(2, violations == 0,
                      f"JND monotonicity over v_J 2/4/6 (v_max 98/96/94): {violations} violations / 100 ladders")
    assert violations == 0


def test_c03_baseline_preservation(randomized_cases):
    cases, _ = randomized_cases
    violations = 0
    for lad, cfg, out in cases:
        base = lad.baseline.id
        kept, _ = step1_jnd_prune(lad.rungs[base], cfg)
        violations += not {r.identity for r in kept} <= out.retained_ids()
    record_acceptance(3, violations == 0, f"baseline preservation: {violations} violations / {len(cases)}")
    assert violations == 0


def test_c04_geometric_recheck(randomized_cases):
    cases, _ = randomized_cases
    violations = checked = 0
    for lad, cfg, out in cases:
        base = lad.baseline.id
        kept, _ = step1_jnd_prune(lad.rungs[base], cfg)
        xs = np.array([r.bitrate for r in kept], dtype=float)
        ys = np.array([r.predicted_vmaf for r in kept])
        for r in out.retained:
            if r.codec == base or not xs[0] <= r.bitrate <= xs[-1]:
                continue
            checked += 1
            violations += r.predicted_vmaf <= np.interp(r.bitrate, xs, ys)
    record_acceptance(4, violations == 0,
                      f"geometric recheck: {violations} retained rungs on/below baseline curve "
                      f"({checked} checked)")
    assert violations == 0


def test_c05_dct_against_direct_definition():
    rng = np.random.default_rng(SEED + 5)
    blocks = rng.uniform(0, 255, (100, 32, 32))
    direct = (dct_direct_kernel(32) @ blocks.reshape(100, -1).T).T.reshape(100, 32, 32)
    err = float(np.abs(dct2d(blocks) - direct).max())
    record_acceptance(5, err <= 1e-9, f"DCT vs direct O(w^4) oracle: max abs error {err:.3e} (<= 1e-9)")
    assert err <= 1e-9


def test_c06_feature_invariants():
    rng = np.random.default_rng(SEED + 6)
    gray = features_from_planes([np.full((72, 100), 77, dtype=np.uint8)] * 4)
    const_ok = (gray.E_Y, gray.h, gray.L_Y) == (0.0, 0.0, 77.0)

    frame = rng.integers(0, 256, (96, 128), dtype=np.uint8)
    dup_ok = features_from_planes([frame, frame.copy(), frame.copy()]).h == 0.0

    worst = 0.0
    for _ in range(10):
        planes = [rng.uniform(0, 255, (64, 96)) for _ in range(3)]
        alpha = float(rng.uniform(0.1, 4.0))
        base = features_from_planes(planes)
        scaled = features_from_planes([alpha * (p - p.mean()) + p.mean() for p in planes])
        worst = max(worst,
                    abs(scaled.E_Y - alpha * base.E_Y) / (alpha * base.E_Y),
                    abs(scaled.h - alpha * base.h) / (alpha * base.h),
                    abs(scaled.L_Y - base.L_Y) / base.L_Y)
    ok = const_ok and dup_ok and worst <= 1e-9
    record_acceptance(6, ok, f"feature invariants: constant={const_ok}, duplicate h=0 {dup_ok}, "
                             f"contrast linearity rel err {worst:.2e} (<= 1e-9)")
    assert const_ok and dup_ok and worst <= 1e-9


def test_c07_forest_determinism_and_fidelity(tmp_path):
    rng = np.random.default_rng(SEED + 7)
    X, y = synthetic_rd_surface(rng, 2500)
    Xtr, ytr, Xte, yte = X[:2000], y[:2000], X[2000:], y[2000:]

    start = time.perf_counter()
    model = fit_forest(Xtr, ytr, seed=7)
    mae = float(np.abs(model.predict_many(Xte) - yte).mean())
    elapsed = time.perf_counter() - start

    files = []
    for name, m in (("a", model), ("b", fit_forest(Xtr[:300], ytr[:300], seed=7)),
                    ("c", fit_forest(Xtr[:300], ytr[:300], seed=7))):
        bank = ModelBank()
        bank.add("avc", RES_720, m)
        files.append(tmp_path / f"{name}.json")
        save_bank(bank, files[-1])
    same_bytes = files[1].read_bytes() == files[2].read_bytes()
    reloaded = load_bank(files[0]).get("avc", RES_720)
    same_pred = np.array_equal(reloaded.predict_many(Xte), model.predict_many(Xte))

    const = fit_forest(Xtr[:200], np.full(200, 73.0), seed=1)
    const_ok = bool((const.predict_many(Xte) == 73.0).all())

    ok = same_bytes and same_pred and const_ok and mae <= 3.0 and elapsed < 60
    record_acceptance(7, ok, f"forest: byte-identical={same_bytes}, constant={const_ok}, "
                             f"held-out MAE {mae:.3f} (<= 3.0), train+eval {elapsed:.1f}s (< 60s)")
    assert same_bytes and same_pred and const_ok
    assert mae <= 3.0
    assert elapsed < 60


def test_c08_energy_identities():
    rng = np.random.default_rng(SEED + 8)
    worst = 0.0
    for _ in range(200):
        lad = random_ladder(rng)
        rungs = lad.all_rungs()
        keep = [r for r in rungs if rng.random() < 0.5] or rungs[:1]
        params = EnergyParams(P_b=float(rng.uniform(1e-10, 1e-8)), T_s=float(rng.uniform(1, 100)),
                              e_enc={c: float(rng.uniform(1e-9, 1e-7)) for c in lad.codec_ids()},
                              e_tx=float(rng.uniform(1e-9, 1e-6)), deliveries=float(rng.integers(1, 1000)))
        d = report(rungs, keep, params).deltas
        worst = max(worst, abs(d["E_tra"] - d["S"]), abs(d["E_sto"] - d["S"]))
    tra_ok = worst <= 1e-9
    sto_ok = storage_energy(1e9, 1e-9, 10) == 10.0
    lad = load_ladder(DATA / "hls_ladder.json").all_rungs()
    ident = report(lad, lad, EnergyParams.load(DATA / "energy_params.json")).deltas
    zero_ok = all(v == 0.0 for v in ident.values())
    ok = tra_ok and sto_ok and zero_ok
    record_acceptance(8, ok, f"energy identities: max |dE_tra - dS| {worst:.1e}, "
                             f"storage(1e9,1e-9,10)=10 Wh {sto_ok}, identity deltas zero {zero_ok}")
    assert tra_ok and sto_ok and zero_ok


GOLDEN_FILES = ("features.csv", "optimized.json", "playlist.m3u8", "rd.csv", "report.csv", "report.json")


def test_c09_end_to_end_golden(tmp_path):
    start = time.perf_counter()
    codes = [
        cli_main(["features", str(DATA / "sample_64x64.y4m"), "-o", str(tmp_path / "features.csv")]),
        cli_main(["optimize", str(DATA / "hls_ladder.json"), str(tmp_path / "features.csv"),
                  str(DATA / "constant_bank.json"), "--jnd", "6", "-o", str(tmp_path / "optimized.json"),
                  "--playlist", str(tmp_path / "playlist.m3u8"), "--rd-csv", str(tmp_path / "rd.csv")]),
        cli_main(["report", str(DATA / "hls_ladder.json"), str(tmp_path / "optimized.json"),
                  str(DATA / "energy_params.json"), "-o", str(tmp_path / "report.csv")]),
    ]
    elapsed = time.perf_counter() - start
    codes.append(cli_main(["train", str(DATA / "constant_training.csv"), "--seed", "0",
                           "-o", str(tmp_path / "bank.json")]))
    bank_same = (tmp_path / "bank.json").read_bytes() == (DATA / "constant_bank.json").read_bytes()
    if os.environ.get("MCBE_REGEN_GOLDEN"):
        GOLDEN.mkdir(exist_ok=True)
        for name in GOLDEN_FILES:
            (GOLDEN / name).write_bytes((tmp_path / name).read_bytes())
    differing = [n for n in GOLDEN_FILES if (tmp_path / n).read_bytes() != (GOLDEN / n).read_bytes()]
    ok = codes == [0, 0, 0, 0] and not differing and bank_same and elapsed < 5.0
    record_acceptance(9, ok, f"end-to-end features->optimize->report: exit codes {codes}, "
                             f"golden mismatches {differing or 'none'}, bundled bank reproduced "
                             f"{bank_same}, {elapsed:.2f}s (< 5s)")
    assert codes == [0, 0, 0, 0]
    assert bank_same
    assert not differing
    assert elapsed < 5.0


def test_c10_latency_sanity():
    rng = np.random.default_rng(SEED + 10)
    X, y = synthetic_rd_surface(rng, 300)
    model = fit_forest(X, y, seed=0)
    ladder = load_ladder(DATA / "hls_ladder.json")
    bank = ModelBank()
    for r in ladder.all_rungs():
        bank.add(r.codec, r.resolution, model)

    # 4 s at 30 fps of 1080p; frames are overlapping views of one larger random canvas.
    canvas = rng.integers(0, 256, (1080 + 120, 1920), dtype=np.uint8)
    frames = [canvas[k:k + 1080] for k in range(120)]

    start = time.perf_counter()
    feats = features_from_planes(frames, "latency")
    out = estimate_ladder(ladder, feats, bank, EliminationConfig())
    elapsed = time.perf_counter() - start
    ok = elapsed < 2.0
    record_acceptance(10, ok, f"latency sanity (informational): 1080p 4 s segment in {elapsed:.2f}s "
                              f"(< 2s target), {len(out.retained)} rungs retained")
    if not ok:
        warnings.warn(f"1080p segment pipeline took {elapsed:.2f}s (target < 2s)")
