import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mcbe.ladder import Codec, MultiCodecLadder, Resolution, Rung  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "mcbe" / "data"
GOLDEN = Path(__file__).parent / "golden"

RES_720 = Resolution(1280, 720, "720p")


def random_ladder(rng, monotone=True, n_codecs=None):
    """2-3 codecs, 3-8 rungs each, random distinct bitrates and ascending-ish VMAF."""
    m = int(rng.integers(2, 4)) if n_codecs is None else n_codecs
    codecs = [Codec(f"c{i}", i) for i in range(m)]
    rungs = []
    for c in codecs:
        n = int(rng.integers(3, 9))
        rates = np.sort(rng.choice(np.arange(1, 200), n, replace=False)) * 100_000
        v = np.sort(rng.uniform(20, 100, n))
        if not monotone:
            v = np.clip(v + rng.normal(0, 3, n), 0, 100)
        rungs += [Rung(c.id, RES_720, int(b), float(x)) for b, x in zip(rates, v)]
    return MultiCodecLadder.build(codecs, rungs)


@pytest.fixture
def data_dir():
    return DATA


ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
