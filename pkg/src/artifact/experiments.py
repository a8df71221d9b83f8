"""End-to-end orchestration: tuning pipelines, constrained-scenario
application runs, and the dataset-size sweep.

Scenario feature vectors are synthetic draws inside fixed per-feature
intervals, not physically generated statistics; a constrained quadruple
need not be realizable by any engine configuration. That is the point
of the application study: the classifier answers for inputs stated as
relations between observables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import DEFAULT_RANGES, Dataset, ParamRanges, generate
from .errors import DomainError, InfeasibleConstraintError, ValidationError
from .knn import (FEATURE_SUBSETS, HyperSpace, KnnModel, SearchResult, _fold_partition,
                  fit, kfold_accuracy, predict_proba_batch, random_search,
                  single_shot_accuracy, predict_batch)
from .metrics import class_metrics, confusion_matrix, render_class_metrics, render_confusion
from .tree import fit_tree, predict_tree

PAIR_RELATIONS = ("equal", "greater", "less")
DEFAULT_SCENARIO_RANGES = ((0.76, 1.001), (0.80, 1.01), (0.76, 1.002), (0.76, 1.001))

_REJECTION_CAP = 1_000_000
_REJECTION_BATCH = 4096


@dataclass(frozen=True)
class ScenarioSpec:
    """Constraint study input: relations imposed on feature pairs.

    `pair12` relates the first two features, `pair34` the last two
    ("absent" for mappings that do not see them, or to leave the pair
    unconstrained).
    """

    pair12: str
    pair34: str = "absent"
    n: int = 1000
    ranges: tuple = DEFAULT_SCENARIO_RANGES
    seed: int = 0

    def __post_init__(self):
        if self.pair12 not in PAIR_RELATIONS:
            raise ValidationError(f"pair12 must be one of {PAIR_RELATIONS}, got {self.pair12!r}")
        if self.pair34 not in PAIR_RELATIONS + ("absent",):
            raise ValidationError(f"pair34 must be a relation or 'absent', got {self.pair34!r}")
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if len(self.ranges) != 4 or any(len(r) != 2 or r[0] > r[1] for r in self.ranges):
            raise ValidationError(f"ranges must be 4 ordered intervals, got {self.ranges}")

    def to_dict(self) -> dict:
        return {"pair12": self.pair12, "pair34": self.pair34, "n": self.n,
                "ranges": [list(r) for r in self.ranges], "seed": self.seed}

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSpec":
        known = {"pair12", "pair34", "n", "ranges", "seed"}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown scenario fields: {sorted(unknown)}")
        if "pair12" not in doc:
            raise ValidationError("scenario needs at least 'pair12'")
        kwargs = dict(doc)
        if "ranges" in kwargs:
            kwargs["ranges"] = tuple(tuple(r) for r in kwargs["ranges"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"scenario document is not valid JSON: {exc}")
        return cls.from_dict(doc)


@dataclass(frozen=True)
class ScenarioResult:
    spec: ScenarioSpec
    unit_counts: tuple   # per class: queries answered with probability exactly 1
    mean_proba: tuple
    winner: int


def _uniform(rng, interval, n):
    lo, hi = interval
    return lo + (hi - lo) * rng.random(n)


def _draw_pair(rng, first, second, relation, n):
    """n pairs from the two intervals under the relation.

    equal: the second coordinate copies the first (continuous equality
    has measure zero, so equality is realized by construction).
    greater/less: joint rejection until the strict inequality holds.
    """
    if relation == "equal":
        a = _uniform(rng, first, n)
        return a, a.copy()
    keep_a = []
    keep_b = []
    accepted = 0
    attempts = 0
    while accepted < n:
        if attempts >= _REJECTION_CAP:
            rate = accepted / attempts
            raise InfeasibleConstraintError(
                f"{relation!r} constraint acceptance rate {rate:.2%} after {attempts} attempts"
            )
        a = _uniform(rng, first, _REJECTION_BATCH)
        b = _uniform(rng, second, _REJECTION_BATCH)
        mask = a > b if relation == "greater" else a < b
        keep_a.append(a[mask])
        keep_b.append(b[mask])
        accepted += int(mask.sum())
        attempts += _REJECTION_BATCH
    return np.concatenate(keep_a)[:n], np.concatenate(keep_b)[:n]


def sample_scenario_features(spec: ScenarioSpec, width: int) -> np.ndarray:
    """Synthetic feature block of the given width under the constraints."""
    if width not in (2, 3, 4):
        raise DomainError(f"feature width must be 2, 3 or 4, got {width}")
    if width < 4 and spec.pair34 != "absent":
        raise DomainError(
            f"pair34={spec.pair34!r} needs 4 features, model sees {width}"
        )
    rng = np.random.default_rng(spec.seed)
    c1, c2 = _draw_pair(rng, spec.ranges[0], spec.ranges[1], spec.pair12, spec.n)
    cols = [c1, c2]
    if width == 3:
        cols.append(_uniform(rng, spec.ranges[2], spec.n))
    elif width == 4:
        if spec.pair34 == "absent":
            cols.append(_uniform(rng, spec.ranges[2], spec.n))
            cols.append(_uniform(rng, spec.ranges[3], spec.n))
        else:
            c3, c4 = _draw_pair(rng, spec.ranges[2], spec.ranges[3], spec.pair34, spec.n)
            cols.extend([c3, c4])
    return np.column_stack(cols)


def run_scenario(model: KnnModel, spec: ScenarioSpec) -> ScenarioResult:
    """Query the model over constrained synthetic inputs and tally the
    queries answered with unit probability per class."""
    x = sample_scenario_features(spec, model.features.shape[1])
    proba = predict_proba_batch(model, x)
    unit = proba == 1.0
    counts = unit.sum(axis=0)
    return ScenarioResult(
        spec=spec,
        unit_counts=tuple(int(c) for c in counts),
        mean_proba=tuple(float(v) for v in proba.mean(axis=0)),
        winner=int(np.argmax(counts)),
    )


def scenario_suite(mapping: str, n: int = 1000, ranges=DEFAULT_SCENARIO_RANGES,
                   seed: int = 0) -> list:
    """The standard constraint grid: 9 cases for the 4-feature mapping
    (3 relations on each pair), 3 for the narrower ones."""
    if mapping not in FEATURE_SUBSETS:
        raise DomainError(f"mapping must be one of {sorted(FEATURE_SUBSETS)}, got {mapping!r}")
    specs = []
    pair34_choices = PAIR_RELATIONS if mapping == "f1" else ("absent",)
    case = 0
    for p12 in PAIR_RELATIONS:
        for p34 in pair34_choices:
            specs.append(ScenarioSpec(pair12=p12, pair34=p34, n=n,
                                      ranges=tuple(ranges), seed=seed + case))
            case += 1
    return specs


@dataclass(frozen=True)
class PipelineResult:
    mapping: str
    search: SearchResult
    model: KnnModel
    val_accuracy: float
    chi: np.ndarray
    per_class: tuple

    def report_text(self) -> str:
        hp = self.search.best
        lines = [
            f"mapping: {self.mapping}",
            f"tuned hyperparameters: k={hp.k}, weighting={hp.weighting}, metric={hp.metric}",
            f"cross-validated accuracy: {self.search.best_score:.4f}",
            f"validation accuracy: {self.val_accuracy:.4f}",
            "",
            render_confusion(self.chi),
            "",
            render_class_metrics(self.chi),
        ]
        return "\n".join(lines)


def run_pipeline(mapping: str, dataset: Dataset, seed: int = 0, n_iter: int = 60,
                 folds: int = 5, space: HyperSpace = HyperSpace(),
                 zscore: bool = False) -> PipelineResult:
    """Tune on the training split, refit, evaluate on the validation split."""
    if mapping not in FEATURE_SUBSETS:
        raise DomainError(f"mapping must be one of {sorted(FEATURE_SUBSETS)}, got {mapping!r}")
    subset = FEATURE_SUBSETS[mapping]
    x_train, y_train = dataset.train
    x_val, y_val = dataset.validation
    search = random_search(x_train[:, subset], y_train, space=space,
                           n_iter=n_iter, seed=seed, folds=folds, zscore=zscore)
    hp = search.best
    model = fit(x_train, y_train, k=hp.k, weighting=hp.weighting, metric=hp.metric,
                feature_subset=subset, zscore=zscore)
    preds = predict_batch(model, x_val[:, subset])
    chi = confusion_matrix(preds, y_val)
    return PipelineResult(
        mapping=mapping, search=search, model=model,
        val_accuracy=float(np.mean(preds == y_val) * 100.0),
        chi=chi, per_class=tuple(class_metrics(chi)),
    )


def evaluate_untuned(mapping: str, dataset: Dataset, k: int = 5,
                     weighting: str = "uniform", metric: str = "euclidean") -> float:
    """Validation accuracy at fixed default hyperparameters."""
    if mapping not in FEATURE_SUBSETS:
        raise DomainError(f"mapping must be one of {sorted(FEATURE_SUBSETS)}, got {mapping!r}")
    subset = FEATURE_SUBSETS[mapping]
    x_train, y_train = dataset.train
    x_val, y_val = dataset.validation
    model = fit(x_train, y_train, k=k, weighting=weighting, metric=metric,
                feature_subset=subset)
    return single_shot_accuracy(model, x_val[:, subset], y_val)


def _tree_kfold(features, labels, folds, seed) -> float:
    parts = _fold_partition(features.shape[0], folds, seed)
    accs = []
    for i, held in enumerate(parts):
        rest = np.concatenate([p for j, p in enumerate(parts) if j != i])
        root = fit_tree(features[rest], labels[rest])
        accs.append(float(np.mean(predict_tree(root, features[held]) == labels[held]) * 100.0))
    return float(np.mean(accs))


def run_size_sweep(sizes, mapping: str = "f1", seed: int = 0,
                   ranges: ParamRanges = DEFAULT_RANGES, folds: int = 5,
                   variant: str = "consistent") -> list:
    """Default-hyperparameter k-fold accuracy at each dataset size,
    with the tree baseline on the same folds."""
    sizes = [int(s) for s in sizes]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DomainError(f"sizes must be non-empty and strictly ascending, got {sizes}")
    if mapping not in FEATURE_SUBSETS:
        raise DomainError(f"mapping must be one of {sorted(FEATURE_SUBSETS)}, got {mapping!r}")
    subset = FEATURE_SUBSETS[mapping]
    rows = []
    for n in sizes:
        # Same generation seed at every size: per-sample substreams make
        # smaller datasets prefixes of larger ones, isolating the size effect.
        ds = generate(n, ranges=ranges, seed=seed, variant=variant)
        x_train, y_train = ds.train
        rows.append({
            "n": n,
            "knn_accuracy": kfold_accuracy(x_train[:, subset], y_train,
                                           folds=folds, seed=seed),
            "tree_accuracy": _tree_kfold(x_train[:, subset], y_train, folds, seed),
        })
    return rows


def sweep_csv(rows) -> str:
    lines = ["n,knn_accuracy,tree_accuracy"]
    for r in rows:
        lines.append(f"{r['n']},{r['knn_accuracy']:.6f},{r['tree_accuracy']:.6f}")
    return "\n".join(lines) + "\n"


def sweep_gnuplot(rows) -> str:
    lines = ["# n knn_accuracy tree_accuracy"]
    for r in rows:
        lines.append(f"{r['n']} {r['knn_accuracy']:.6f} {r['tree_accuracy']:.6f}")
    return "\n".join(lines) + "\n"
