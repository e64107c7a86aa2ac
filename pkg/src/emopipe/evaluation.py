"""Metrics and the cross-validation protocol.

Accuracy is (n_TN + n_TP) / total; the two-class F-score treats *low* as the
positive class (precision = TP/(TP+FP), sensitivity = TP/(TP+FN)), with
degenerate denominators scoring 0.  Reported spread is the population
standard deviation of per-fold accuracies; the F-score and per-class
accuracies are computed on the predictions pooled over all test folds.

The default protocol is 10-fold stratified cross-validation at trial level;
``split="subject"`` switches to grouped folds that never place one subject's
trials in both sides of a fold.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .classifiers import (
    Dataset,
    cart_predict_batch,
    cart_train,
    forest_predict_batch,
    forest_train,
    knn_predict_batch,
    knn_train,
)
from .ensemble import ensemble_predict_batch, ensemble_train
from .errors import EmopipeError, ValidationError
from .model import FeatureMatrix, Ratings, Task, label_for_task

CLASSIFIER_CHOICES = ("knn", "cart", "rf", "ens")


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts; rows are truth, columns are predictions."""

    counts: np.ndarray
    positive: int = 0  # ordinal of the positive class (low) for two-class scores

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValidationError(f"confusion matrix must be square, got {counts.shape}")
        if (counts < 0).any():
            raise ValidationError("confusion matrix has negative counts")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_pairs(cls, truth, predicted, n_classes: int, positive: int = 0):
        truth = np.asarray(truth, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        if truth.shape != predicted.shape:
            raise ValidationError("truth/prediction length mismatch")
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (truth, predicted), 1)
        return cls(counts=counts, positive=positive)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    def two_class_counts(self) -> tuple[int, int, int, int]:
        """(n_TP, n_TN, n_FP, n_FN) with `positive` as the positive class."""
        if self.n_classes != 2:
            raise ValidationError("two-class counts requested on a multi-class matrix")
        p = self.positive
        n = 1 - p
        tp = int(self.counts[p, p])
        tn = int(self.counts[n, n])
        fp = int(self.counts[n, p])
        fn = int(self.counts[p, n])
        return tp, tn, fp, fn


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValidationError("empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


def f_score(cm: ConfusionMatrix) -> float:
    """2 * precision * sensitivity / (precision + sensitivity); 0 when degenerate."""
    tp, _, fp, fn = cm.two_class_counts()
    if tp + fp == 0 or tp + fn == 0 or tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    sensitivity = tp / (tp + fn)
    return float(2.0 * precision * sensitivity / (precision + sensitivity))


def per_class_accuracy(cm: ConfusionMatrix) -> list[float]:
    """Correct among true-c over count of true-c, per class (0 when unseen)."""
    totals = cm.counts.sum(axis=1)
    diag = np.diag(cm.counts)
    return [float(diag[c] / totals[c]) if totals[c] else 0.0 for c in range(cm.n_classes)]


def stratified_kfold(labels, k: int, seed: int):
    """Seeded stratified partition into k folds of (train_idx, test_idx).

    Each class's indices are shuffled and dealt into k nearly equal chunks
    (sizes differing by at most one), so per-fold class proportions stay
    within one sample of the global proportions.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    gen = rng.substream(seed, rng.STREAM_FOLDS)
    test_folds = [[] for _ in range(k)]
    for cls in np.unique(labels):
        cls_idx = np.nonzero(labels == cls)[0]
        if cls_idx.size < k:
            raise ValidationError(
                f"class {cls} has {cls_idx.size} samples, fewer than k={k}"
            )
        shuffled = cls_idx[gen.permutation(cls_idx.size)]
        q, r = divmod(shuffled.size, k)
        start = 0
        for j in range(k):
            size = q + (1 if j < r else 0)
            test_folds[j].append(shuffled[start : start + size])
            start += size
    folds = []
    all_idx = np.arange(labels.size)
    for j in range(k):
        test = np.sort(np.concatenate(test_folds[j]))
        train = np.setdiff1d(all_idx, test, assume_unique=True)
        folds.append((train, test))
    return folds


def subject_kfold(subjects, k: int, seed: int):
    """Grouped folds: a subject's trials never straddle a train/test boundary."""
    subjects = np.asarray(subjects, dtype=np.int64)
    unique = np.unique(subjects)
    if unique.size < k:
        raise ValidationError(f"{unique.size} subjects, fewer than k={k}")
    gen = rng.substream(seed, rng.STREAM_FOLDS)
    shuffled = unique[gen.permutation(unique.size)]
    q, r = divmod(shuffled.size, k)
    folds = []
    all_idx = np.arange(subjects.size)
    start = 0
    for j in range(k):
        size = q + (1 if j < r else 0)
        held_out = set(shuffled[start : start + size].tolist())
        start += size
        test = np.array([i for i in all_idx if int(subjects[i]) in held_out], dtype=np.int64)
        train = np.setdiff1d(all_idx, test, assume_unique=True)
        folds.append((train, test))
    return folds


def fold_hash(folds) -> str:
    """Stable digest of a fold assignment (test index arrays, in order)."""
    h = hashlib.sha256()
    for _, test in folds:
        h.update(np.asarray(test, dtype="<i8").tobytes())
        h.update(b"|")
    return h.hexdigest()


def shuffled_labels(labels, seed: int) -> np.ndarray:
    """Seeded label permutation for chance-level control runs."""
    labels = np.asarray(labels, dtype=np.int64)
    gen = rng.substream(seed, rng.STREAM_SHUFFLE)
    return labels[gen.permutation(labels.size)]


@dataclass(frozen=True)
class EvaluationReport:
    task: str
    classifier: str
    n_folds: int
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    std_accuracy: float
    f1: float | None  # two-class tasks only
    positive_class: str | None
    class_names: tuple[str, ...]
    per_class_accuracy: tuple[float, ...]
    class_counts: tuple[int, ...]
    pooled_confusion: tuple[tuple[int, ...], ...]
    fold_confusions: tuple[tuple[tuple[int, ...], ...], ...]
    fold_hash: str
    seed: int
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "classifier": self.classifier,
            "n_folds": self.n_folds,
            "fold_accuracies": list(self.fold_accuracies),
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "f_score": self.f1,
            "positive_class": self.positive_class,
            "class_names": list(self.class_names),
            "per_class_accuracy": list(self.per_class_accuracy),
            "class_counts": list(self.class_counts),
            "pooled_confusion": [list(row) for row in self.pooled_confusion],
            "fold_confusions": [[list(row) for row in cm] for cm in self.fold_confusions],
            "fold_hash": self.fold_hash,
            "seed": self.seed,
            "metadata": self.metadata,
        }

    def summary_row(self) -> str:
        acc = f"{100.0 * self.mean_accuracy:.2f}% +/- {100.0 * self.std_accuracy:.2f}%"
        if self.f1 is not None:
            return f"{acc}  F={self.f1:.4f}"
        per_class = "  ".join(
            f"{name}={100.0 * a:.2f}%"
            for name, a in zip(self.class_names, self.per_class_accuracy)
        )
        return f"{acc}  {per_class}"


def _member_trainers(knn_k, n_trees, feature_subset):
    def train_knn(data: Dataset, seed: int):
        model = knn_train(data, k=min(knn_k, data.n_rows))
        return lambda rows: knn_predict_batch(model, rows)

    def train_cart(data: Dataset, seed: int):
        model = cart_train(data)
        return lambda rows: cart_predict_batch(model, rows)

    def train_rf(data: Dataset, seed: int):
        model = forest_train(data, n_trees=n_trees, feature_subset=feature_subset, seed=seed)
        return lambda rows: forest_predict_batch(model, rows)

    def train_ens(data: Dataset, seed: int):
        model = ensemble_train(data, seed=seed, knn_k=knn_k, n_trees=n_trees,
                               feature_subset=feature_subset)

        def predict(rows):
            labels, trace = ensemble_predict_batch(model, rows)
            predict.last_trace = trace
            return labels

        return predict

    return {"knn": train_knn, "cart": train_cart, "rf": train_rf, "ens": train_ens}


def run_experiment(
    dataset: Dataset,
    task: Task,
    classifier,
    seed: int,
    n_folds: int = 10,
    split: str = "trial",
    knn_k: int = 5,
    n_trees: int = 100,
    feature_subset: int | None = None,
    positive: int = 0,
    folds=None,
    metadata: dict | None = None,
) -> EvaluationReport:
    """Cross-validated evaluation of one classifier on one task.

    ``classifier`` is one of "knn"/"cart"/"rf"/"ens", or a callable
    ``trainer(train_data, fold_seed) -> predict(rows)`` for harness tests.
    Standardization and all other fitting happens inside each training fold.
    Pass ``folds`` to reuse a fold assignment across several runs (the
    ablation grid does this so its cells are comparable).
    """
    if dataset.n_classes != task.n_classes:
        raise ValidationError(
            f"dataset has {dataset.n_classes} classes but task {task.value} "
            f"expects {task.n_classes}"
        )
    if folds is None:
        if split == "subject":
            if dataset.subjects is None:
                raise ValidationError("subject split requested but dataset has no subject ids")
            folds = subject_kfold(dataset.subjects, n_folds, seed)
        elif split == "trial":
            folds = stratified_kfold(dataset.y, n_folds, seed)
        else:
            raise ValidationError(f"unknown split {split!r}")

    if callable(classifier):
        trainer = classifier
        clf_name = getattr(classifier, "__name__", "custom")
    else:
        if classifier not in CLASSIFIER_CHOICES:
            raise ValidationError(
                f"classifier must be one of {CLASSIFIER_CHOICES}, got {classifier!r}"
            )
        trainer = _member_trainers(knn_k, n_trees, feature_subset)[classifier]
        clf_name = classifier

    fold_accs = []
    fold_cms = []
    pooled_truth = []
    pooled_pred = []
    for f, (train_idx, test_idx) in enumerate(folds):
        try:
            fold_seed = rng.derive_seed(seed, rng.STREAM_FOLD_SEED_BASE + f)
            predict = trainer(dataset.subset(train_idx), fold_seed)
            pred = np.asarray(predict(dataset.X[test_idx]), dtype=np.int64)
        except EmopipeError as exc:
            raise type(exc)(f"fold {f}: {exc}") from exc
        truth = dataset.y[test_idx]
        cm = ConfusionMatrix.from_pairs(truth, pred, task.n_classes, positive)
        fold_accs.append(accuracy(cm))
        fold_cms.append(tuple(tuple(int(v) for v in row) for row in cm.counts))
        pooled_truth.append(truth)
        pooled_pred.append(pred)

    pooled_truth = np.concatenate(pooled_truth)
    pooled_pred = np.concatenate(pooled_pred)
    pooled = ConfusionMatrix.from_pairs(pooled_truth, pooled_pred, task.n_classes, positive)
    accs = np.asarray(fold_accs)
    class_counts = np.bincount(dataset.y, minlength=task.n_classes)
    return EvaluationReport(
        task=task.value,
        classifier=clf_name,
        n_folds=len(folds),
        fold_accuracies=tuple(float(a) for a in accs),
        mean_accuracy=float(accs.mean()),
        std_accuracy=float(accs.std()),
        f1=f_score(pooled) if task.n_classes == 2 else None,
        positive_class=task.class_names[positive] if task.n_classes == 2 else None,
        class_names=task.class_names,
        per_class_accuracy=tuple(per_class_accuracy(pooled)),
        class_counts=tuple(int(c) for c in class_counts),
        pooled_confusion=tuple(tuple(int(v) for v in row) for row in pooled.counts),
        fold_confusions=tuple(fold_cms),
        fold_hash=fold_hash(folds),
        seed=seed,
        metadata=metadata or {},
    )


def dataset_from_features(
    features: FeatureMatrix,
    labels: dict[tuple[int, int], Ratings],
    task: Task,
    threshold: float = 5.0,
) -> Dataset:
    """Join a feature matrix with a ratings table into a labeled dataset."""
    y = np.empty(features.n_rows, dtype=np.int64)
    subjects = np.empty(features.n_rows, dtype=np.int64)
    for i, (subject, trial) in enumerate(features.row_keys):
        key = (subject, trial)
        if key not in labels:
            raise ValidationError(f"no rating for subject {subject}, trial {trial}")
        y[i] = label_for_task(labels[key], task, threshold)
        subjects[i] = subject
    return Dataset(features.data, y, task.n_classes, subjects=subjects)
