"""Stratified cross-validation, metrics, and the full experiment grid.

The fold pipeline owns every train-only artifact: the standardizer, the
selector scores, and the column mask are all fitted on the training split, so
no test-fold information can leak into them. Chi2 sees raw non-negative
features; MI and NCA see the standardized matrix; classifiers consume the
masked standardized matrix except the decision tree, which takes raw masked
features (its splits are scale-invariant).
"""

from __future__ import annotations

import csv
import hashlib
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classifiers import FAMILIES, ClassifierConfig, fit_classifier
from .data_model import EmbeddingDataset, FeatureMask
from .selectors import (
    FeatureScores,
    MIConfig,
    NCAConfig,
    chi2_scores,
    mi_scores,
    nca_fit,
    select_top_k,
)
from .seeds import derive_rng

SELECTORS = ("chi2", "mi", "nca")
CSV_HEADER = ("selector", "k", "classifier", "fold", "accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every row to one test fold."""

    fold_of: np.ndarray
    n_folds: int
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "fold_of", np.ascontiguousarray(self.fold_of, dtype=np.int64))

    def test_indices(self, fold: int) -> np.ndarray:
        self._check_fold(fold)
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        self._check_fold(fold)
        return np.flatnonzero(self.fold_of != fold)

    def _check_fold(self, fold: int) -> None:
        if not 0 <= fold < self.n_folds:
            raise ValueError(f"fold must be in [0, {self.n_folds}), got {fold}")


def make_stratified_folds(labels, n_folds: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle each class by the derived seed and deal its rows round-robin.

    Per class the fold sizes differ by at most one; with 30 rows per class and
    5 folds every (class, fold) cell holds exactly 6 rows.
    """
    y = np.asarray(labels, dtype=np.int64)
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    counts = np.bincount(y)
    too_small = np.flatnonzero((counts > 0) & (counts < n_folds))
    if too_small.size:
        raise ValueError(
            f"class {int(too_small[0])} has {int(counts[too_small[0]])} rows, "
            f"fewer than {n_folds} folds"
        )
    rng = derive_rng(seed, "folds")
    fold_of = np.empty(y.shape[0], dtype=np.int64)
    for c in range(counts.size):
        idx = np.flatnonzero(y == c)
        if idx.size == 0:
            continue
        perm = rng.permutation(idx)
        fold_of[perm] = np.arange(perm.size) % n_folds
    return FoldPlan(fold_of, n_folds, seed)


@dataclass(frozen=True)
class ConfusionMatrix:
    """c x c counts; rows are true classes, columns predicted classes."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (counts < 0).any():
            raise ValueError("confusion matrix counts must be non-negative")

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(true_labels, predicted_labels, n_classes: int) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("true and predicted labels must be equal-length vectors")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    if t.size:
        if t.min() < 0 or t.max() >= n_classes or p.min() < 0 or p.max() >= n_classes:
            raise ValueError("labels out of range for the declared class count")
        np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


@dataclass
class MetricRow:
    """One evaluated grid cell (or a cross-fold mean)."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    selector: str = ""
    k: int = 0  # 0 means no feature selection
    classifier: str = ""
    fold: int | str = 0


def compute_metrics(cm: ConfusionMatrix, averaging: str = "weighted") -> MetricRow:
    """Accuracy plus averaged per-class precision, recall, and F1.

    Per-class ratios use the 0/0 -> 0 convention. Weighted averaging weights
    each class by its true-instance count, which makes the averaged recall
    coincide with accuracy; macro averaging treats classes uniformly.
    """
    if averaging not in ("weighted", "macro"):
        raise ValueError("averaging must be 'weighted' or 'macro'")
    total = cm.total
    if total == 0:
        raise ValueError("cannot compute metrics of an empty confusion matrix")
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        f1_den = 2 * tp + (predicted - tp) + (support - tp)
        f1 = np.where(f1_den > 0, 2 * tp / f1_den, 0.0)
    if averaging == "weighted":
        w = support / total
        avg = lambda v: float((w * v).sum())
    else:
        avg = lambda v: float(v.mean())
    return MetricRow(
        accuracy=float(tp.sum() / total),
        precision=avg(precision),
        recall=avg(recall),
        f1=avg(f1),
    )


@dataclass(frozen=True)
class Standardizer:
    """Per-column mean/std fitted on a training split; constant columns pass through."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std == 0, 1.0, std)
        return cls(mean, std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass
class _FoldData:
    fold_id: int
    train_idx: np.ndarray
    test_idx: np.ndarray
    X_train_raw: np.ndarray
    X_test_raw: np.ndarray
    y_train: np.ndarray
    y_test: np.ndarray
    standardizer: Standardizer
    X_train_std: np.ndarray
    X_test_std: np.ndarray
    n_classes: int


def _prepare_fold(dataset: EmbeddingDataset, plan: FoldPlan, fold_id: int) -> _FoldData:
    train_idx = plan.train_indices(fold_id)
    test_idx = plan.test_indices(fold_id)
    X = dataset.features.astype(np.float64)
    Xtr, Xte = X[train_idx], X[test_idx]
    std = Standardizer.fit(Xtr)
    return _FoldData(
        fold_id=fold_id,
        train_idx=train_idx,
        test_idx=test_idx,
        X_train_raw=Xtr,
        X_test_raw=Xte,
        y_train=dataset.labels[train_idx],
        y_test=dataset.labels[test_idx],
        standardizer=std,
        X_train_std=std.transform(Xtr),
        X_test_std=std.transform(Xte),
        n_classes=dataset.n_classes,
    )


def _selector_scores(
    selector: str,
    fold: _FoldData,
    mi_config: MIConfig | None,
    nca_config: NCAConfig | None,
) -> FeatureScores:
    if selector == "chi2":
        return chi2_scores(fold.X_train_raw, fold.y_train)
    if selector == "mi":
        return mi_scores(fold.X_train_std, fold.y_train, mi_config)
    if selector == "nca":
        return nca_fit(fold.X_train_std, fold.y_train, nca_config)
    raise ValueError(f"unknown selector {selector!r}")


def _evaluate_cell(
    fold: _FoldData,
    mask: FeatureMask | None,
    selector: str,
    k: int,
    config: ClassifierConfig,
    averaging: str,
) -> MetricRow:
    if config.family == "dtree":
        Xtr, Xte = fold.X_train_raw, fold.X_test_raw
    else:
        Xtr, Xte = fold.X_train_std, fold.X_test_std
    if mask is not None:
        Xtr, Xte = mask.apply(Xtr), mask.apply(Xte)
    model = fit_classifier(config, Xtr, fold.y_train)
    predicted = model.predict(Xte)
    cm = confusion_matrix(fold.y_test, predicted, fold.n_classes)
    row = compute_metrics(cm, averaging)
    row.selector = selector
    row.k = k
    row.classifier = config.family
    row.fold = fold.fold_id
    return row


def run_pipeline_fold(
    dataset: EmbeddingDataset,
    fold_plan: FoldPlan,
    fold_id: int,
    selector: str,
    k: int,
    classifier_config: ClassifierConfig,
    mi_config: MIConfig | None = None,
    nca_config: NCAConfig | None = None,
    averaging: str = "weighted",
) -> MetricRow:
    """Evaluate one (selector, k, classifier) cell on one held-out fold."""
    if selector != "none" and selector not in SELECTORS:
        raise ValueError(f"selector must be 'none' or one of {SELECTORS}")
    fold = _prepare_fold(dataset, fold_plan, fold_id)
    if selector == "none":
        mask, k = None, 0
    else:
        scores = _selector_scores(selector, fold, mi_config, nca_config)
        mask = select_top_k(scores, k)
    return _evaluate_cell(fold, mask, selector, k, classifier_config, averaging)


@dataclass(frozen=True)
class GridConfig:
    """Everything that determines a full experiment grid run."""

    selectors: tuple[str, ...] = SELECTORS
    ks: tuple[int, ...] = (200, 300, 400, 500)
    classifiers: tuple[str, ...] = FAMILIES
    include_baseline: bool = True
    n_folds: int = 5
    seed: int = 7
    averaging: str = "weighted"
    jobs: int = 1
    classifier_configs: dict[str, ClassifierConfig] = field(default_factory=dict)
    mi_config: MIConfig | None = None
    nca_config: NCAConfig | None = None

    def __post_init__(self) -> None:
        for s in self.selectors:
            if s not in SELECTORS:
                raise ValueError(f"unknown selector {s!r}")
        for f in self.classifiers:
            if f not in FAMILIES:
                raise ValueError(f"unknown classifier family {f!r}")
        if any(k < 1 for k in self.ks):
            raise ValueError("k values must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.averaging not in ("weighted", "macro"):
            raise ValueError("averaging must be 'weighted' or 'macro'")

    def config_for(self, family: str) -> ClassifierConfig:
        return self.classifier_configs.get(family) or ClassifierConfig(family=family)

    def cells(self) -> list[tuple[str, int]]:
        out: list[tuple[str, int]] = []
        if self.include_baseline:
            out.append(("none", 0))
        out.extend((s, k) for s in self.selectors for k in self.ks)
        return out


@dataclass
class ExperimentReport:
    """Per-fold and mean metric rows of one grid run."""

    rows: list[MetricRow]
    seed: int = 0
    provenance: str = ""

    def mean_rows(self) -> list[MetricRow]:
        return [r for r in self.rows if r.fold == "mean"]

    def get_mean(self, selector: str, k: int, classifier: str) -> MetricRow:
        for r in self.rows:
            if (
                r.fold == "mean"
                and r.selector == selector
                and r.k == k
                and r.classifier == classifier
            ):
                return r
        raise KeyError(f"no mean row for ({selector}, {k}, {classifier})")

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow(
                [
                    r.selector,
                    r.k,
                    r.classifier,
                    r.fold,
                    repr(r.accuracy),
                    repr(r.precision),
                    repr(r.recall),
                    repr(r.f1),
                ]
            )
        return buf.getvalue()

    def save_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_string())

    def to_markdown(self) -> str:
        return render_markdown(self)


def load_report_csv(path: str | Path) -> ExperimentReport:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected report header: {header}")
        for line in reader:
            selector, k, classifier, fold, acc, prec, rec, f1 = line
            rows.append(
                MetricRow(
                    accuracy=float(acc),
                    precision=float(prec),
                    recall=float(rec),
                    f1=float(f1),
                    selector=selector,
                    k=int(k),
                    classifier=classifier,
                    fold="mean" if fold == "mean" else int(fold),
                )
            )
    return ExperimentReport(rows=rows, provenance=str(path))


# Accuracies reported for the original private 420-signer corpus; embedded in
# rendered reports as context only, never comparable to synthetic-data runs.
REFERENCE_RESULTS = (
    ("nca", 300, "svm_rbf", 97.70),
    ("none", 0, "lda", 92.2),
)


def render_markdown(report: ExperimentReport) -> str:
    """Markdown tables (one per selector) of the mean rows, metrics as percent."""
    means = report.mean_rows()
    selectors = []
    for r in means:
        if r.selector not in selectors:
            selectors.append(r.selector)
    lines = ["# Experiment grid report", ""]
    if report.provenance:
        lines += [f"Input: {report.provenance}", ""]
    for selector in selectors:
        rows = [r for r in means if r.selector == selector]
        classifiers = []
        for r in rows:
            if r.classifier not in classifiers:
                classifiers.append(r.classifier)
        ks = sorted({r.k for r in rows})
        title = "No feature selection" if selector == "none" else f"Selector: {selector}"
        lines += [f"## {title}", ""]
        lines.append("| k | metric | " + " | ".join(classifiers) + " |")
        lines.append("|---" * (len(classifiers) + 2) + "|")
        by_key = {(r.k, r.classifier): r for r in rows}
        for k in ks:
            for metric in ("accuracy", "precision", "recall", "f1"):
                cells = [f"{getattr(by_key[(k, c)], metric) * 100:.2f}" for c in classifiers]
                klabel = "all" if k == 0 else str(k)
                lines.append(f"| {klabel} | {metric} | " + " | ".join(cells) + " |")
        lines.append("")
    lines += ["## Reference results", ""]
    lines.append(
        "Accuracies reported on the original private 420-signer corpus "
        "(not reproducible here; listed for context only):"
    )
    for selector, k, classifier, acc in REFERENCE_RESULTS:
        klabel = "no selection" if k == 0 else f"k={k}"
        lines.append(f"- {selector} ({klabel}) + {classifier}: {acc}%")
    lines.append("")
    return "\n".join(lines)


def dataset_content_hash(dataset: EmbeddingDataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.features, dtype="<f4").tobytes())
    h.update(np.ascontiguousarray(dataset.labels, dtype="<i8").tobytes())
    h.update("\x00".join(dataset.class_names).encode("utf-8"))
    return h.hexdigest()


def cell_cache_key(
    dataset_hash: str, config: GridConfig, selector: str, k: int, family: str, fold: int
) -> str:
    parts = [
        dataset_hash,
        str(config.seed),
        str(config.n_folds),
        config.averaging,
        selector,
        str(k),
        family,
        repr(config.config_for(family)),
        repr(config.mi_config or MIConfig()),
        repr(config.nca_config or NCAConfig()),
        str(fold),
    ]
    return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()


def run_experiment_grid(
    dataset: EmbeddingDataset,
    config: GridConfig | None = None,
    cell_cache=None,
    log=None,
) -> ExperimentReport:
    """Evaluate every (selector, k, classifier) cell over all folds.

    Selector scores are computed once per (selector, fold) and shared across
    k values and classifiers; results are identical to running each cell in
    isolation because every stage is a pure function of the training split.
    `cell_cache`, when given, maps cache keys to (accuracy, precision, recall,
    f1) tuples and makes interrupted runs resumable. Worker threads (`jobs`)
    change wall time only: rows are assembled in one canonical order.
    """
    config = config or GridConfig()
    plan = make_stratified_folds(dataset.labels, config.n_folds, config.seed)
    ds_hash = dataset_content_hash(dataset) if cell_cache is not None else ""
    cells = config.cells()
    fold_rows: dict[tuple[str, int, str, int], MetricRow] = {}

    for fold_id in range(config.n_folds):
        pending: list[tuple[str, int, str]] = []
        for selector, k in cells:
            for family in config.classifiers:
                key = (selector, k, family, fold_id)
                if cell_cache is not None:
                    ck = cell_cache_key(ds_hash, config, selector, k, family, fold_id)
                    hit = cell_cache.get(ck)
                    if hit is not None:
                        acc, prec, rec, f1 = hit
                        fold_rows[key] = MetricRow(
                            acc, prec, rec, f1, selector, k, family, fold_id
                        )
                        continue
                pending.append((selector, k, family))
        if not pending:
            continue

        fold = _prepare_fold(dataset, plan, fold_id)
        if log:
            log(f"fold {fold_id}: {len(pending)} cells to evaluate")
        scores: dict[str, FeatureScores] = {}
        for selector in {s for s, _, _ in pending if s != "none"}:
            scores[selector] = _selector_scores(selector, fold, config.mi_config, config.nca_config)
        masks: dict[tuple[str, int], FeatureMask | None] = {}
        for selector, k, _ in pending:
            if (selector, k) not in masks:
                masks[(selector, k)] = (
                    None if selector == "none" else select_top_k(scores[selector], k)
                )

        def evaluate(task: tuple[str, int, str]) -> tuple[tuple[str, int, str], MetricRow]:
            selector, k, family = task
            row = _evaluate_cell(
                fold, masks[(selector, k)], selector, k,
                config.config_for(family), config.averaging,
            )
            return task, row

        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(evaluate, pending))
        else:
            results = [evaluate(t) for t in pending]
        for (selector, k, family), row in results:
            fold_rows[(selector, k, family, fold_id)] = row
            if cell_cache is not None:
                ck = cell_cache_key(ds_hash, config, selector, k, family, fold_id)
                cell_cache.put(ck, (row.accuracy, row.precision, row.recall, row.f1))

    rows: list[MetricRow] = []
    for selector, k in cells:
        for family in config.classifiers:
            per_fold = [fold_rows[(selector, k, family, f)] for f in range(config.n_folds)]
            rows.extend(per_fold)
            n = float(config.n_folds)
            rows.append(
                MetricRow(
                    accuracy=sum(r.accuracy for r in per_fold) / n,
                    precision=sum(r.precision for r in per_fold) / n,
                    recall=sum(r.recall for r in per_fold) / n,
                    f1=sum(r.f1 for r in per_fold) / n,
                    selector=selector,
                    k=k,
                    classifier=family,
                    fold="mean",
                )
            )
    return ExperimentReport(rows=rows, seed=config.seed, provenance=dataset.provenance)
