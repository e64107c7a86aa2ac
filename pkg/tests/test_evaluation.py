import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emopipe.classifiers import Dataset
from emopipe.errors import ValidationError
from emopipe.evaluation import (
    ConfusionMatrix,
    EvaluationReport,
    accuracy,
    f_score,
    fold_hash,
    per_class_accuracy,
    run_experiment,
    shuffled_labels,
    stratified_kfold,
    subject_kfold,
)
from emopipe.model import Task


def cm2(tp, tn, fp, fn):
    """Two-class matrix with low (ordinal 0) as the positive class."""
    return ConfusionMatrix(np.array([[tp, fn], [fp, tn]]), positive=0)


class TestMetrics:
    def test_accuracy_perfect(self):
        assert accuracy(cm2(1, 1, 0, 0)) == 1.0

    def test_accuracy_zero(self):
        assert accuracy(cm2(0, 0, 1, 1)) == 0.0

    def test_accuracy_hand_value(self):
        assert accuracy(cm2(2, 3, 1, 2)) == 0.625

    def test_accuracy_empty_rejected(self):
        with pytest.raises(ValidationError):
            accuracy(cm2(0, 0, 0, 0))

    def test_f_score_hand_value(self):
        assert f_score(cm2(2, 0, 1, 1)) == pytest.approx(2.0 / 3.0)

    def test_f_score_perfect(self):
        assert f_score(cm2(5, 5, 0, 0)) == 1.0

    def test_f_score_degenerate(self):
        assert f_score(cm2(0, 3, 2, 0)) == 0.0
        assert f_score(cm2(0, 3, 0, 2)) == 0.0

    def test_positive_class_is_low(self):
        # 3 low correctly, 1 low missed, 2 high called low
        cm = ConfusionMatrix.from_pairs([0, 0, 0, 0, 1, 1, 1], [0, 0, 0, 1, 0, 0, 1], 2)
        tp, tn, fp, fn = cm.two_class_counts()
        assert (tp, tn, fp, fn) == (3, 1, 2, 1)

    def test_metrics_match_recount(self, rng):
        truth = rng.integers(0, 2, 200)
        pred = rng.integers(0, 2, 200)
        cm = ConfusionMatrix.from_pairs(truth, pred, 2)
        assert accuracy(cm) == (truth == pred).mean()
        tp = int(((truth == 0) & (pred == 0)).sum())
        fp = int(((truth == 1) & (pred == 0)).sum())
        fn = int(((truth == 0) & (pred == 1)).sum())
        expected = 0.0
        if tp:
            p, s = tp / (tp + fp), tp / (tp + fn)
            expected = 2 * p * s / (p + s)
        assert f_score(cm) == pytest.approx(expected)

    def test_per_class_accuracy_recount(self, rng):
        truth = rng.integers(0, 4, 300)
        pred = rng.integers(0, 4, 300)
        cm = ConfusionMatrix.from_pairs(truth, pred, 4)
        for c, acc in enumerate(per_class_accuracy(cm)):
            mask = truth == c
            assert acc == pytest.approx((pred[mask] == c).mean())


class TestStratifiedKfold:
    def test_balanced_tiny(self):
        labels = np.array([0, 1] * 5)
        folds = stratified_kfold(labels, 5, seed=0)
        for _, test in folds:
            assert len(test) == 2
            assert sorted(labels[test]) == [0, 1]

    def test_partition_property(self, rng):
        labels = rng.integers(0, 3, 97)
        while np.bincount(labels, minlength=3).min() < 4:
            labels = rng.integers(0, 3, 97)
        folds = stratified_kfold(labels, 4, seed=3)
        all_test = np.concatenate([test for _, test in folds])
        assert len(all_test) == 97
        assert len(np.unique(all_test)) == 97
        for train, test in folds:
            assert np.intersect1d(train, test).size == 0
            assert len(train) + len(test) == 97

    def test_deap_sized_stratification(self):
        labels = np.array([0] * 526 + [1] * 754)
        folds = stratified_kfold(labels, 10, seed=1)
        for _, test in folds:
            counts = np.bincount(labels[test], minlength=2)
            assert counts[0] in (52, 53)
            assert counts[1] in (75, 76)

    def test_small_class_rejected(self):
        with pytest.raises(ValidationError):
            stratified_kfold([0, 0, 0, 1, 1, 1, 1, 1], 4, seed=0)

    def test_k_validation(self):
        with pytest.raises(ValidationError):
            stratified_kfold([0, 1], 1, seed=0)

    def test_seed_changes_assignment(self):
        labels = np.array([0, 1] * 20)
        assert fold_hash(stratified_kfold(labels, 5, 1)) != fold_hash(
            stratified_kfold(labels, 5, 2)
        )

    def test_seed_reproducible(self):
        labels = np.array([0, 1] * 20)
        assert fold_hash(stratified_kfold(labels, 5, 9)) == fold_hash(
            stratified_kfold(labels, 5, 9)
        )

    @settings(max_examples=30, deadline=None)
    @given(
        n_per_class=st.integers(min_value=4, max_value=40),
        n_classes=st.integers(min_value=2, max_value=4),
        k=st.integers(min_value=2, max_value=4),
        seed=st.integers(min_value=0, max_value=1000),
    )
    def test_stratification_within_one(self, n_per_class, n_classes, k, seed):
        gen = np.random.default_rng(seed)
        labels = gen.permutation(np.repeat(np.arange(n_classes), n_per_class))
        folds = stratified_kfold(labels, k, seed)
        for _, test in folds:
            counts = np.bincount(labels[test], minlength=n_classes)
            for c in range(n_classes):
                assert abs(counts[c] - n_per_class / k) < 1.0


class TestSubjectKfold:
    def test_no_subject_straddles(self):
        subjects = np.repeat(np.arange(12), 4)
        folds = subject_kfold(subjects, 5, seed=2)
        for train, test in folds:
            assert set(subjects[train]) & set(subjects[test]) == set()
        all_test = np.concatenate([t for _, t in folds])
        assert len(np.unique(all_test)) == len(subjects)

    def test_too_few_subjects(self):
        with pytest.raises(ValidationError):
            subject_kfold([1, 1, 2, 2], 3, seed=0)


def _memorizing_trainer(full: Dataset):
    lookup = {row.tobytes(): int(label) for row, label in zip(full.X, full.y)}

    def trainer(train_data, seed):
        return lambda rows: np.array([lookup[r.tobytes()] for r in rows])

    trainer.__name__ = "memorizer"
    return trainer


class TestRunExperiment:
    def _dataset(self, seed=0, n=120, d=6, separated=True):
        gen = np.random.default_rng(seed)
        y = gen.permutation(np.repeat([0, 1], n // 2))
        X = gen.normal(size=(n, d))
        if separated:
            X[:, 0] += 3.0 * y
        return Dataset(X, y, 2)

    def test_memorizing_classifier_is_perfect(self):
        data = self._dataset()
        report = run_experiment(data, Task.AROUSAL2, _memorizing_trainer(data), seed=5)
        assert report.mean_accuracy == 1.0
        assert report.std_accuracy == 0.0

    def test_label_shuffle_is_chance(self):
        data = self._dataset(n=200)
        shuffled = Dataset(data.X, shuffled_labels(data.y, seed=8), 2)
        report = run_experiment(shuffled, Task.AROUSAL2, "cart", seed=8)
        sigma = np.sqrt(0.25 / data.n_rows)
        assert abs(report.mean_accuracy - 0.5) <= 3.0 * sigma

    def test_std_is_population_std(self):
        data = self._dataset(seed=3)
        report = run_experiment(data, Task.AROUSAL2, "knn", seed=2)
        accs = np.array(report.fold_accuracies)
        assert abs(report.std_accuracy - accs.std()) < 1e-12
        assert abs(report.mean_accuracy - accs.mean()) < 1e-12

    def test_bit_reproducible(self):
        data = self._dataset(seed=4)
        a = run_experiment(data, Task.AROUSAL2, "ens", seed=31, n_trees=5)
        b = run_experiment(data, Task.AROUSAL2, "ens", seed=31, n_trees=5)
        assert a.to_dict() == b.to_dict()

    def test_two_class_report_fields(self):
        data = self._dataset(seed=6)
        report = run_experiment(data, Task.AROUSAL2, "knn", seed=1)
        assert report.f1 is not None
        assert report.positive_class == "low"
        assert report.n_folds == 10
        assert len(report.fold_accuracies) == 10
        total = sum(sum(row) for row in report.pooled_confusion)
        assert total == data.n_rows
        # per-fold matrices sum to the pooled one
        assert len(report.fold_confusions) == 10
        summed = np.sum([np.array(cm) for cm in report.fold_confusions], axis=0)
        np.testing.assert_array_equal(summed, np.array(report.pooled_confusion))

    def test_four_class_report_fields(self):
        gen = np.random.default_rng(9)
        y = gen.permutation(np.repeat(np.arange(4), 30))
        X = gen.normal(size=(120, 5)) + y[:, None]
        report = run_experiment(Dataset(X, y, 4), Task.QUADRANT4, "cart", seed=3)
        assert report.f1 is None
        assert report.class_names == ("lalv", "lahv", "halv", "hahv")
        assert len(report.per_class_accuracy) == 4
        # per-class accuracy against pooled confusion recount
        pooled = np.array(report.pooled_confusion)
        for c in range(4):
            assert report.per_class_accuracy[c] == pytest.approx(
                pooled[c, c] / pooled[c].sum()
            )

    def test_task_class_mismatch_rejected(self):
        data = self._dataset()
        with pytest.raises(ValidationError):
            run_experiment(data, Task.QUADRANT4, "knn", seed=1)

    def test_unknown_classifier_rejected(self):
        with pytest.raises(ValidationError):
            run_experiment(self._dataset(), Task.AROUSAL2, "svm", seed=1)

    def test_error_annotated_with_fold(self):
        data = self._dataset(n=40)

        def broken(train_data, seed):
            raise ValidationError("boom")

        with pytest.raises(ValidationError, match="fold 0: boom"):
            run_experiment(data, Task.AROUSAL2, broken, seed=1)

    def test_subject_split(self):
        gen = np.random.default_rng(5)
        y = gen.permutation(np.repeat([0, 1], 60))
        X = gen.normal(size=(120, 4)) + 2.0 * y[:, None]
        subjects = np.repeat(np.arange(12), 10)
        data = Dataset(X, y, 2, subjects=subjects)
        report = run_experiment(data, Task.AROUSAL2, "knn", seed=4, split="subject")
        assert report.n_folds == 10

    def test_shared_folds_share_hash(self):
        data = self._dataset(seed=12)
        folds = stratified_kfold(data.y, 10, seed=7)
        reports = [
            run_experiment(data, Task.AROUSAL2, clf, seed=7, folds=folds, n_trees=5)
            for clf in ("knn", "cart", "rf", "ens")
        ]
        hashes = {r.fold_hash for r in reports}
        assert len(hashes) == 1
