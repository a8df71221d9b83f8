"""Labeled dataset generation and CSV persistence.

Each sample is one random engine configuration: the features are the
four baseline-normalized exchange statistics, the label is the quartile
interval of the hot-bath coherence strength. Generation is deterministic
in (seed, ranges, n), with per-sample RNG substreams so the draws do not
depend on evaluation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .counting import exchange_moment_ratios
from .engine import EngineParams
from .errors import DomainError, GenerationQualityError, NumericalError, ParseError, ValidationError

CSV_HEADER = "c1,c2,c3,c4,label,t_c,t_h,t_l,p_c,p_h,split"

# Hard sampling bounds; custom ranges must stay inside them.
_BOUNDS = {
    "t_c": (0.4, 2.5),
    "t_h": (3.0, 4.5),
    "t_l": (1.0, 7.0),
    "p_c": (0.0, 1.0),
    "p_h": (0.0, 1.0),
}

_MAX_REDRAWS_FRACTION = 0.10


@dataclass(frozen=True)
class ParamRanges:
    """Per-dimension closed sampling intervals for the varied parameters.

    The cold-coherence default stops at 0.3: beyond that the normalized
    features drift outside the narrow window the classifiers are built
    for, while the label variable p_h must cover all four quartiles.
    """

    t_c: tuple = (0.4, 2.5)
    t_h: tuple = (3.0, 4.5)
    t_l: tuple = (1.0, 7.0)
    p_c: tuple = (0.0, 0.3)
    p_h: tuple = (0.0, 1.0)

    def __post_init__(self):
        for name, outer in _BOUNDS.items():
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise DomainError(f"range {name}=({lo}, {hi}) is not a valid interval")
            if lo < outer[0] - 1e-12 or hi > outer[1] + 1e-12:
                raise DomainError(f"range {name}=({lo}, {hi}) outside sampling bounds {outer}")

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in _BOUNDS}

    @classmethod
    def from_dict(cls, doc: dict) -> "ParamRanges":
        unknown = set(doc) - set(_BOUNDS)
        if unknown:
            raise DomainError(f"unknown range keys: {sorted(unknown)}")
        return cls(**{k: tuple(v) for k, v in doc.items()})


DEFAULT_RANGES = ParamRanges()

_CLASS_EDGES = (0.25, 0.50, 0.75)


def label_of(p_h: float) -> int:
    """Quartile class of the hot-bath coherence strength.

    Intervals are closed below and open above, except the last which
    absorbs the endpoint 1.0.
    """
    if not 0.0 <= p_h <= 1.0:
        raise DomainError(f"p_h must lie in [0, 1], got {p_h}")
    if p_h < _CLASS_EDGES[0]:
        return 0
    if p_h < _CLASS_EDGES[1]:
        return 1
    if p_h < _CLASS_EDGES[2]:
        return 2
    return 3


@dataclass(frozen=True)
class LabeledSample:
    features: tuple
    label: int
    params: EngineParams

    def __post_init__(self):
        if len(self.features) != 4 or not all(math.isfinite(c) for c in self.features):
            raise ValidationError(f"features must be 4 finite values, got {self.features}")
        if self.label != label_of(self.params.p_h):
            raise ValidationError(
                f"label {self.label} inconsistent with p_h={self.params.p_h}"
            )


@dataclass(frozen=True)
class Dataset:
    samples: tuple
    train_idx: tuple
    val_idx: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.samples)
        train, val = set(self.train_idx), set(self.val_idx)
        if train & val:
            raise ValidationError("train and validation splits overlap")
        if train | val != set(range(n)) or len(train) + len(val) != n:
            raise ValidationError("splits must partition the sample indices")

    def __len__(self) -> int:
        return len(self.samples)

    def feature_matrix(self, indices=None) -> np.ndarray:
        rows = self.samples if indices is None else [self.samples[i] for i in indices]
        return np.array([s.features for s in rows], dtype=float).reshape(len(rows), 4)

    def label_array(self, indices=None) -> np.ndarray:
        rows = self.samples if indices is None else [self.samples[i] for i in indices]
        return np.array([s.label for s in rows], dtype=np.intp)

    @property
    def train(self):
        return self.feature_matrix(self.train_idx), self.label_array(self.train_idx)

    @property
    def validation(self):
        return self.feature_matrix(self.val_idx), self.label_array(self.val_idx)


def _draw_params(rng: np.random.Generator, ranges: ParamRanges) -> EngineParams:
    def u(interval):
        lo, hi = interval
        return lo + (hi - lo) * rng.random()

    return EngineParams(
        t_c=u(ranges.t_c), t_h=u(ranges.t_h), t_l=u(ranges.t_l),
        p_c=u(ranges.p_c), p_h=u(ranges.p_h),
    )


def generate(n: int, ranges: ParamRanges = DEFAULT_RANGES, seed: int = 0,
             train_frac: float = 0.70, variant: str = "consistent") -> Dataset:
    """Draw n labeled samples i.i.d. uniformly over `ranges`.

    Degenerate draws (vanishing baseline statistics or failed solves) are
    redrawn from the same per-sample substream; more than 10% redraws
    overall signals pathological ranges and aborts.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 < train_frac < 1.0:
        raise DomainError(f"train_frac must be in (0, 1), got {train_frac}")

    children = np.random.SeedSequence(seed).spawn(n + 1)
    samples = []
    redraws = 0
    budget = max(10, int(_MAX_REDRAWS_FRACTION * n))
    for i in range(n):
        rng = np.random.default_rng(children[i])
        while True:
            params = _draw_params(rng, ranges)
            try:
                feats = exchange_moment_ratios(params, variant)
            except NumericalError:
                redraws += 1
                if redraws > budget:
                    raise GenerationQualityError(
                        f"more than {budget} degenerate draws for n={n}; ranges look pathological"
                    )
                continue
            break
        samples.append(LabeledSample(tuple(float(c) for c in feats),
                                     label_of(params.p_h), params))

    perm = np.random.default_rng(children[n]).permutation(n)
    n_train = int(round(n * train_frac))
    train_idx = tuple(sorted(int(i) for i in perm[:n_train]))
    val_idx = tuple(sorted(int(i) for i in perm[n_train:]))

    meta = {
        "schema": "dataset-meta/1",
        "seed": int(seed),
        "n": int(n),
        "ranges": ranges.to_dict(),
        "fixed": {k: v for k, v in EngineParams().to_dict().items()
                  if k in ("e1", "e_a", "e_b", "g", "r", "tau")},
        "variant": variant,
        "train_frac": train_frac,
        "redraws": redraws,
        "version": __version__,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    return Dataset(tuple(samples), train_idx, val_idx, meta)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def meta_path(path) -> Path:
    return Path(path).with_suffix(".meta.json")


def write_csv(ds: Dataset, path) -> None:
    """Write samples as CSV plus a `<name>.meta.json` sidecar.

    The CSV bytes are a pure function of the dataset content; anything
    run-dependent (timestamp, redraw count) lives only in the sidecar.
    """
    path = Path(path)
    train = set(ds.train_idx)
    lines = [CSV_HEADER]
    for i, s in enumerate(ds.samples):
        p = s.params
        lines.append(",".join(
            [_fmt(c) for c in s.features]
            + [str(s.label)]
            + [_fmt(v) for v in (p.t_c, p.t_h, p.t_l, p.p_c, p.p_h)]
            + ["train" if i in train else "val"]
        ))
    path.write_text("\n".join(lines) + "\n")
    meta_path(path).write_text(json.dumps(ds.meta, indent=2, sort_keys=True) + "\n")


def read_csv(path) -> Dataset:
    """Inverse of write_csv; also reloads the sidecar when present."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}")
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ParseError(f"expected header {CSV_HEADER!r}", line=1)

    side = meta_path(path)
    meta = {}
    if side.exists():
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed sidecar {side}: {exc}")
    fixed = meta.get("fixed", {})

    samples = []
    train_idx = []
    val_idx = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != 11:
            raise ParseError(f"expected 11 columns, got {len(cells)}", line=lineno)
        try:
            feats = tuple(float(c) for c in cells[:4])
            label = int(cells[4])
            t_c, t_h, t_l, p_c, p_h = (float(c) for c in cells[5:10])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno)
        split = cells[10]
        if split not in ("train", "val"):
            raise ParseError(f"split tag must be 'train' or 'val', got {split!r}", line=lineno)
        try:
            params = EngineParams(t_c=t_c, t_h=t_h, t_l=t_l, p_c=p_c, p_h=p_h, **fixed)
            samples.append(LabeledSample(feats, label, params))
        except (ValidationError, TypeError) as exc:
            raise ParseError(str(exc), line=lineno)
        (train_idx if split == "train" else val_idx).append(len(samples) - 1)

    return Dataset(tuple(samples), tuple(train_idx), tuple(val_idx), meta)
