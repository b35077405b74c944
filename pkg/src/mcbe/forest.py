"""Random-forest VMAF regressors, one per (codec, resolution).

Trees are plain CART regressors grown on bootstrap resamples. Everything
that could vary between runs is pinned: each tree draws its resample from a
generator seeded with ``(seed, tree_index)``, every feature is scanned at
every split, thresholds are midpoints between neighbouring distinct values,
and ties go to the lowest feature index and then the lowest threshold.
Given the same samples and seed, the serialized model is byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._parallel import worker_count
from .errors import (BankIntegrityError, BankVersionError, MissingModelError, ModelError,
                     TrainingDataError)
from .features import SegmentFeatures
from .ladder import MultiCodecLadder, Resolution, Rung

INPUT_NAMES = ("E_Y", "h", "L_Y", "bitrate")
BANK_FORMAT = "mcbe-model-bank"
BANK_VERSION = 1


@dataclass(frozen=True)
class Hyperparameters:
    n_estimators: int = 100
    max_depth: int = 14
    min_samples_split: int = 2
    min_samples_leaf: int = 1


@dataclass(frozen=True)
class TrainingSample:
    features: tuple[float, float, float, float]  # E_Y, h, L_Y, bitrate (bits/s)
    target_vmaf: float
    codec: str
    resolution: Resolution

    def __post_init__(self):
        if not 0.0 <= self.target_vmaf <= 100.0:
            raise TrainingDataError(f"target vmaf {self.target_vmaf} outside [0, 100]")
        if self.features[3] <= 0:
            raise TrainingDataError(f"bitrate must be positive, got {self.features[3]}")


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Flat node arrays; ``feature[i] == -1`` marks node ``i`` as a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            i, d = stack.pop()
            if self.feature[i] < 0:
                best = max(best, d)
            else:
                stack += [(self.left[i], d + 1), (self.right[i], d + 1)]
        return best

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.value[node]
            fx = X[rows, np.where(inner, f, 0)]
            nxt = np.where(fx <= self.threshold[node], self.left[node], self.right[node])
            node = np.where(inner, nxt, node)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DecisionTree":
        try:
            tree = cls(
                feature=np.asarray(d["feature"], dtype=np.int64),
                threshold=np.asarray(d["threshold"], dtype=np.float64),
                left=np.asarray(d["left"], dtype=np.int64),
                right=np.asarray(d["right"], dtype=np.int64),
                value=np.asarray(d["value"], dtype=np.float64),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"malformed tree: {e}") from None
        tree.check()
        return tree

    def check(self) -> None:
        n = self.node_count
        if n == 0 or not all(len(a) == n for a in (self.threshold, self.left, self.right, self.value)):
            raise ModelError("tree node arrays are empty or of unequal length")
        inner = self.feature >= 0
        if (self.feature[inner] >= len(INPUT_NAMES)).any():
            raise ModelError("tree splits on an unknown feature index")
        for a in (self.left[inner], self.right[inner]):
            if ((a <= 0) | (a >= n)).any():
                raise ModelError("tree child index out of range")


def _grow_tree(X: np.ndarray, y: np.ndarray, hp: Hyperparameters) -> DecisionTree:
    n, d = X.shape
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    # Per-node index matrices keep every feature's sort order, so no re-sorting below the root.
    order = np.argsort(X, axis=0, kind="stable").T.copy()
    cols = np.arange(d)[:, None]
    in_left = np.zeros(n, dtype=bool)
    stack = [(new_node(), order, 0)]
    while stack:
        node, S, depth = stack.pop()
        m = S.shape[1]
        ys = y[S[0]]
        mean = ys.mean()
        value[node] = float(mean)
        if m < hp.min_samples_split or depth >= hp.max_depth or ys.min() == ys.max():
            continue

        xs = X[S, cols]
        yc = y[S] - mean
        csum = np.cumsum(yc, axis=1)
        total = csum[:, -1:]
        nl = np.arange(1, m, dtype=np.float64)
        cl = csum[:, :-1]
        # Maximising this is equivalent to minimising the children's summed squared error.
        score = cl * cl / nl + (total - cl) ** 2 / (m - nl)
        valid = xs[:, 1:] > xs[:, :-1]
        if hp.min_samples_leaf > 1:
            k = hp.min_samples_leaf
            valid[:, : k - 1] = False
            valid[:, m - k:] = False
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        best = int(np.argmax(score))  # first maximum: lowest feature, then lowest threshold
        f, k = divmod(best, m - 1)
        k += 1  # number of samples going left
        lo, hi = xs[f, k - 1], xs[f, k]
        thr = lo / 2.0 + hi / 2.0
        if thr >= hi:
            thr = lo

        in_left[S[f, :k]] = True
        mask = in_left[S]
        in_left[S[f, :k]] = False
        S_left = S[mask].reshape(d, k)
        S_right = S[~mask].reshape(d, m - k)

        feature[node] = f
        threshold[node] = float(thr)
        li, ri = new_node(), new_node()
        left[node], right[node] = li, ri
        stack.append((ri, S_right, depth + 1))
        stack.append((li, S_left, depth + 1))

    return DecisionTree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=np.float64),
    )


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)
    training_seed: int = 0
    feature_names: tuple[str, ...] = INPUT_NAMES
    n_samples: int = 0

    def __post_init__(self):
        if len(self.trees) == 0:
            raise ModelError("forest has no trees")
        if len(self.trees) != self.hyperparameters.n_estimators:
            raise ModelError(
                f"forest has {len(self.trees)} trees, hyperparameters say {self.hyperparameters.n_estimators}"
            )

    def predict_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(INPUT_NAMES):
            raise ModelError(f"expected {len(INPUT_NAMES)} inputs per row, got {X.shape[1]}")
        acc = np.zeros(len(X))
        for t in self.trees:
            acc += t.predict(X)
        return np.clip(acc / len(self.trees), 0.0, 100.0)

    def to_dict(self) -> dict:
        return {
            "hyperparameters": asdict(self.hyperparameters),
            "training_seed": self.training_seed,
            "feature_names": list(self.feature_names),
            "n_samples": self.n_samples,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ForestModel":
        try:
            names = tuple(d["feature_names"])
            if names != INPUT_NAMES:
                raise ModelError(f"model inputs {names} do not match {INPUT_NAMES}")
            return cls(
                trees=tuple(DecisionTree.from_dict(t) for t in d["trees"]),
                hyperparameters=Hyperparameters(**d["hyperparameters"]),
                training_seed=int(d["training_seed"]),
                feature_names=names,
                n_samples=int(d.get("n_samples", 0)),
            )
        except (KeyError, TypeError) as e:
            raise ModelError(f"malformed forest entry: {e}") from None


def fit_forest(X, y, seed: int = 0, hp: Hyperparameters | None = None,
               n_jobs: int | None = None) -> ForestModel:
    """Fit a forest on an (n, 4) input matrix and n VMAF targets."""
    hp = hp or Hyperparameters()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(INPUT_NAMES) or len(X) != len(y):
        raise TrainingDataError(f"expected X of shape (n, {len(INPUT_NAMES)}) matching y")
    if len(y) < 2:
        raise TrainingDataError(f"need at least 2 samples, got {len(y)}")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise TrainingDataError("training data contains non-finite values")

    def grow(index: int) -> DecisionTree:
        rng = np.random.default_rng([seed, index])
        boot = rng.integers(0, len(y), size=len(y))
        return _grow_tree(X[boot], y[boot], hp)

    workers = worker_count(n_jobs)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trees = tuple(pool.map(grow, range(hp.n_estimators)))
    else:
        trees = tuple(grow(i) for i in range(hp.n_estimators))
    return ForestModel(trees, hp, int(seed), INPUT_NAMES, len(y))


def train_forest(samples: Sequence[TrainingSample], seed: int = 0,
                 hp: Hyperparameters | None = None, n_jobs: int | None = None) -> ForestModel:
    if len(samples) < 2:
        raise TrainingDataError(f"need at least 2 samples, got {len(samples)}")
    keys = {(s.codec, s.resolution) for s in samples}
    if len(keys) > 1:
        raise TrainingDataError(
            "samples mix (codec, resolution) keys: "
            + ", ".join(sorted(f"{c}@{r.key}" for c, r in keys))
        )
    X = [s.features for s in samples]
    y = [s.target_vmaf for s in samples]
    return fit_forest(X, y, seed, hp, n_jobs)


def predict(model: ForestModel, features: Sequence[float]) -> float:
    """Predicted VMAF for one (E_Y, h, L_Y, bitrate) tuple."""
    return float(model.predict_many([features])[0])


@dataclass
class ModelBank:
    models: dict[tuple[str, Resolution], ForestModel] = field(default_factory=dict)
    version: int = BANK_VERSION
    resolutions: frozenset[Resolution] | None = None

    def add(self, codec: str, resolution: Resolution, model: ForestModel) -> None:
        if self.resolutions is not None and resolution not in self.resolutions:
            raise ModelError(f"resolution {resolution.key} is not in the configured resolution set")
        self.models[(codec, resolution)] = model

    def get(self, codec: str, resolution: Resolution) -> ForestModel:
        try:
            return self.models[(codec, resolution)]
        except KeyError:
            raise MissingModelError(codec, resolution.key) from None

    def keys(self) -> list[tuple[str, Resolution]]:
        return sorted(self.models, key=lambda k: (k[0], k[1].width, k[1].height))

    def payload(self) -> dict:
        return {
            "models": [
                {
                    "codec": codec,
                    "width": res.width,
                    "height": res.height,
                    "label": res.name,
                    "model": self.models[(codec, res)].to_dict(),
                }
                for codec, res in self.keys()
            ]
        }


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def save_bank(bank: ModelBank, path: str | Path) -> None:
    payload = bank.payload()
    doc = {
        "format": BANK_FORMAT,
        "version": bank.version,
        "sha256": hashlib.sha256(_canonical(payload)).hexdigest(),
        "bank": payload,
    }
    Path(path).write_bytes(_canonical(doc) + b"\n")


def load_bank(path: str | Path) -> ModelBank:
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise BankIntegrityError(f"{path}: not a readable model bank ({e})") from None
    if not isinstance(doc, dict) or doc.get("format") != BANK_FORMAT:
        raise BankIntegrityError(f"{path}: not a {BANK_FORMAT} file")
    if doc.get("version") != BANK_VERSION:
        raise BankVersionError(
            f"{path}: model bank version {doc.get('version')!r}, this build reads version {BANK_VERSION}"
        )
    payload = doc.get("bank")
    if payload is None or hashlib.sha256(_canonical(payload)).hexdigest() != doc.get("sha256"):
        raise BankIntegrityError(f"{path}: checksum mismatch")
    bank = ModelBank(version=BANK_VERSION)
    for entry in payload["models"]:
        res = Resolution(int(entry["width"]), int(entry["height"]), entry.get("label"))
        if (entry["codec"], res) in bank.models:
            raise ModelError(f"{path}: duplicate model key {entry['codec']}@{res.key}")
        bank.add(entry["codec"], res, ForestModel.from_dict(entry["model"]))
    return bank


def predict_ladder(bank: ModelBank, ladder: MultiCodecLadder,
                   features: SegmentFeatures) -> MultiCodecLadder:
    """Return ``ladder`` with every rung's predicted VMAF filled in."""

    def annotate(r: Rung) -> Rung:
        model = bank.get(r.codec, r.resolution)
        return r.with_vmaf(predict(model, (*features.as_tuple(), float(r.bitrate))))

    return ladder.map_rungs(annotate)


def read_training_csv(path: str | Path) -> list[TrainingSample]:
    required = ("segment_id", "codec", "width", "height", "bitrate_bps", "E_Y", "h", "L_Y", "vmaf")
    samples = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(required) - set(reader.fieldnames or ())
        if missing:
            raise TrainingDataError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        for lineno, row in enumerate(reader, start=2):
            try:
                vmaf = float(row["vmaf"])
                if not 0.0 <= vmaf <= 100.0:
                    raise TrainingDataError(f"vmaf {vmaf} outside [0, 100]")
                samples.append(TrainingSample(
                    features=(float(row["E_Y"]), float(row["h"]), float(row["L_Y"]),
                              float(int(row["bitrate_bps"]))),
                    target_vmaf=vmaf,
                    codec=row["codec"],
                    resolution=Resolution(int(row["width"]), int(row["height"])),
                ))
            except (ValueError, TypeError) as e:
                raise TrainingDataError(f"{path}: row {lineno}: {e}") from None
    return samples


def group_samples(samples: Iterable[TrainingSample]) -> dict[tuple[str, Resolution], list[TrainingSample]]:
    groups: dict[tuple[str, Resolution], list[TrainingSample]] = {}
    for s in samples:
        groups.setdefault((s.codec, s.resolution), []).append(s)
    return dict(sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1].width, kv[0][1].height)))


def train_bank(samples: Sequence[TrainingSample], seed: int = 0, hp: Hyperparameters | None = None,
               n_jobs: int | None = None) -> ModelBank:
    bank = ModelBank()
    for (codec, res), group in group_samples(samples).items():
        if len(group) < 2:
            raise TrainingDataError(f"only {len(group)} sample(s) for {codec}@{res.key}; need at least 2")
        bank.add(codec, res, train_forest(group, seed, hp, n_jobs))
    return bank
