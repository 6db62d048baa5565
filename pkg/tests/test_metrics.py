"""Tests for the SecClass evaluation module."""

import csv
import itertools
from fractions import Fraction

import numpy as np
import pytest

from seclass.corpus import ALL_CLASSES, SecurityClass
from seclass.errors import BadN, DataError, EmptyDocumentGroup
from seclass.metrics import (
    ConfusionMatrix,
    EvalReport,
    document_class_prior,
    document_class_prior_exact,
    document_level_eval,
    enumerate_document_prior,
    f1_per_class,
    macro_f1_score,
    precision_recall_f1,
    prior_table,
)

U, C, S = SecurityClass.U, SecurityClass.C, SecurityClass.S


def pair_count_f1(y_true, y_pred, cls):
    """Brute-force F1 by walking every (true, predicted) pair."""
    tp = fp = fn = 0
    for t, p in zip(y_true, y_pred):
        if t == cls and p == cls:
            tp += 1
        elif p == cls:
            fp += 1
        elif t == cls:
            fn += 1
    if 2 * tp + fp + fn == 0:
        return Fraction(0)
    return Fraction(2 * tp, 2 * tp + fp + fn)


def random_labels(rng, n):
    return [SecurityClass(int(v)) for v in rng.integers(0, 3, size=n)]


class TestConfusionMatrix:
    """Tests for ConfusionMatrix."""

    def test_from_labels(self):
        """Test counts[true][predicted]."""
        cm = ConfusionMatrix.from_labels([U, C, S, S], [U, S, S, C])
        assert cm.total == 4
        assert cm.tp(S) == 1
        assert cm.fp(S) == 1
        assert cm.fn(S) == 1
        assert cm.support(S) == 2
        assert cm.counts.tolist() == [[1, 0, 0], [0, 0, 1], [0, 1, 1]]

    def test_length_mismatch(self):
        """Test that unequal label lists raise DataError."""
        with pytest.raises(DataError):
            ConfusionMatrix.from_labels([U, C], [U])

    def test_negative_counts_rejected(self):
        """Test that negative cells are rejected."""
        with pytest.raises(DataError):
            ConfusionMatrix(ALL_CLASSES, np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]]))

    def test_add(self):
        """Test that confusion matrices add cell by cell."""
        a = ConfusionMatrix.from_labels([U, C], [U, C])
        b = ConfusionMatrix.from_labels([S], [C])
        assert (a + b).total == 3
        assert (a + b).fp(C) == 1

    def test_dict_round_trip(self):
        """Test serialization of the matrix."""
        cm = ConfusionMatrix.from_labels([U, C, S], [C, C, S])
        restored = ConfusionMatrix.from_dict(cm.to_dict())
        assert restored.classes == cm.classes
        np.testing.assert_array_equal(restored.counts, cm.counts)

    def test_class_order_invariance(self):
        """Test that metrics do not depend on the class list order."""
        rng = np.random.default_rng(4)
        y_true, y_pred = random_labels(rng, 200), random_labels(rng, 200)
        a = f1_per_class(ConfusionMatrix.from_labels(y_true, y_pred), exact=True)
        b = f1_per_class(ConfusionMatrix.from_labels(y_true, y_pred, classes=(S, U, C)), exact=True)
        assert a == b


class TestF1PerClass:
    """Tests for per-class F1."""

    def test_perfect_predictions(self):
        """Test F1 = 1 for every present class on perfect predictions."""
        labels = [U, U, C, S, S, S]
        assert f1_per_class(ConfusionMatrix.from_labels(labels, labels)) == {U: 1.0, C: 1.0, S: 1.0}

    def test_one_each(self):
        """Test TP=1, FP=1, FN=1 gives 0.5."""
        cm = ConfusionMatrix.from_labels([C, C, U], [C, U, C])
        assert f1_per_class(cm)[C] == 0.5

    def test_zero_denominator(self):
        """Test that an absent, never-predicted class scores 0."""
        cm = ConfusionMatrix.from_labels([U, U], [U, U])
        f1 = f1_per_class(cm)
        assert f1[S] == 0.0
        assert f1[C] == 0.0

    def test_against_pair_counting_oracle(self):
        """Test 1000 random prediction sets against exact pair counting."""
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            y_true, y_pred = random_labels(rng, 500), random_labels(rng, 500)
            exact = f1_per_class(ConfusionMatrix.from_labels(y_true, y_pred), exact=True)
            for cls in ALL_CLASSES:
                assert exact[cls] == pair_count_f1(y_true, y_pred, cls)

    def test_harmonic_mean_of_precision_recall(self):
        """Test F1 equals 2PR/(P+R) from the reported precision and recall."""
        rng = np.random.default_rng(9)
        for _ in range(50):
            cm = ConfusionMatrix.from_labels(random_labels(rng, 60), random_labels(rng, 60))
            for cls, (p, r, f1) in precision_recall_f1(cm).items():
                if p + r > 0:
                    assert f1 == pytest.approx(2 * p * r / (p + r))

    def test_against_sklearn(self):
        """Test agreement with scikit-learn's F1 and confusion matrix."""
        sklearn_metrics = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(11)
        for _ in range(20):
            y_true, y_pred = random_labels(rng, 300), random_labels(rng, 300)
            cm = ConfusionMatrix.from_labels(y_true, y_pred)
            expected = sklearn_metrics.confusion_matrix(
                [int(c) for c in y_true], [int(c) for c in y_pred], labels=[0, 1, 2],
            )
            np.testing.assert_array_equal(cm.counts, expected)
            scores = sklearn_metrics.f1_score(
                [int(c) for c in y_true], [int(c) for c in y_pred], labels=[0, 1, 2], average=None,
            )
            assert [f1_per_class(cm)[c] for c in ALL_CLASSES] == pytest.approx(list(scores))
            assert macro_f1_score(y_true, y_pred) == pytest.approx(float(np.mean(scores)))


class TestEvalReport:
    """Tests for EvalReport."""

    def test_metrics_in_range_and_support(self):
        """Test that metrics lie in [0, 1] and support sums to the total."""
        rng = np.random.default_rng(1)
        report = EvalReport.from_labels(random_labels(rng, 100), random_labels(rng, 100))
        for cls in ALL_CLASSES:
            for value in (report.precision[cls], report.recall[cls], report.f1[cls]):
                assert 0.0 <= value <= 1.0
        assert sum(report.support.values()) == report.total == 100

    def test_undefined_flags(self):
        """Test that undefined precision / recall are flagged."""
        report = EvalReport.from_labels([U, U], [U, U])
        assert "precision:S" in report.undefined
        assert "recall:S" in report.undefined
        assert "precision:U" not in report.undefined

    def test_json_round_trip(self, tmp_path):
        """Test writing and loading the JSON report."""
        report = EvalReport.from_labels([U, C, S, S], [U, S, S, C], provenance={"run": "x"})
        report.write_json(tmp_path / "report.json")
        loaded = EvalReport.load(tmp_path / "report.json")
        assert loaded.f1 == report.f1
        assert loaded.macro_f1 == report.macro_f1
        assert loaded.provenance == {"run": "x"}
        assert loaded.confusion.counts.tolist() == report.confusion.counts.tolist()

    def test_csv_layout(self, tmp_path):
        """Test one CSV row per class."""
        report = EvalReport.from_labels([U, C, S], [U, C, C])
        report.write_csv(tmp_path / "report.csv")
        with (tmp_path / "report.csv").open() as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["class", "precision", "recall", "f1", "support"]
        assert [r[0] for r in rows[1:]] == ["U", "C", "S"]
        assert rows[3][4] == "1"


class TestDocumentLevelEval:
    """Tests for document-level max-rule evaluation."""

    def test_over_classification(self):
        """Test that one S paragraph in a U document makes the document S."""
        report = document_level_eval({"d1": [U, U, S]}, {"d1": U})
        assert report.confusion.counts[0, 2] == 1
        assert report.f1[U] == 0.0
        assert report.level == "document"

    def test_all_correct(self):
        """Test that correct paragraph predictions give correct documents."""
        predictions = {"d1": [U, C], "d2": [S, U], "d3": [U]}
        truth = {"d1": C, "d2": S, "d3": U}
        report = document_level_eval(predictions, truth)
        assert report.macro_f1 == 1.0

    def test_random_against_recomputation(self):
        """Test document metrics against a brute-force recomputation."""
        rng = np.random.default_rng(6)
        predictions, truth = {}, {}
        for i in range(80):
            n = int(rng.integers(1, 6))
            predictions[f"d{i}"] = random_labels(rng, n)
            truth[f"d{i}"] = SecurityClass(int(rng.integers(0, 3)))
        report = document_level_eval(predictions, truth)
        keys = sorted(truth)
        y_true = [truth[k] for k in keys]
        y_pred = [max(predictions[k]) for k in keys]
        for cls in ALL_CLASSES:
            assert report.f1[cls] == pytest.approx(float(pair_count_f1(y_true, y_pred, cls)))

    def test_empty_group(self):
        """Test that a document with no predictions raises EmptyDocumentGroup."""
        with pytest.raises(EmptyDocumentGroup):
            document_level_eval({"d1": []}, {"d1": U})

    def test_key_mismatch(self):
        """Test that documents missing on one side raise DataError."""
        with pytest.raises(DataError):
            document_level_eval({"d1": [U]}, {"d2": U})


class TestDocumentClassPrior:
    """Tests for max-rule document class priors."""

    def test_single_paragraph(self):
        """Test n=1 gives 1/3 for every class."""
        for cls in ALL_CLASSES:
            assert document_class_prior_exact(1, cls) == Fraction(1, 3)

    def test_two_paragraphs(self):
        """Test n=2 gives 1/9, 3/9, 5/9."""
        assert document_class_prior_exact(2, U) == Fraction(1, 9)
        assert document_class_prior_exact(2, C) == Fraction(3, 9)
        assert document_class_prior_exact(2, S) == Fraction(5, 9)

    def test_matches_enumeration(self):
        """Test closed forms against all 3^n label sequences for n = 1..8."""
        for n in range(1, 9):
            enumerated = enumerate_document_prior(n)
            for cls in ALL_CLASSES:
                assert document_class_prior_exact(n, cls) == enumerated[cls]

    def test_monotone_in_n(self):
        """Test that Pr(S) strictly increases and Pr(U) strictly decreases."""
        secret = [document_class_prior_exact(n, S) for n in range(1, 13)]
        unclassified = [document_class_prior_exact(n, U) for n in range(1, 13)]
        assert all(a < b for a, b in zip(secret, secret[1:]))
        assert all(a > b for a, b in zip(unclassified, unclassified[1:]))

    def test_sums_to_one(self):
        """Test exact normalization for n <= 12."""
        for n in range(1, 13):
            assert sum(document_class_prior_exact(n, c) for c in ALL_CLASSES) == 1

    def test_non_uniform_prior(self):
        """Test a skewed paragraph distribution against enumeration."""
        prior = {U: Fraction(1, 2), C: Fraction(3, 10), S: Fraction(1, 5)}
        for n in range(1, 6):
            enumerated = enumerate_document_prior(n, prior)
            for cls in ALL_CLASSES:
                assert document_class_prior_exact(n, cls, prior) == enumerated[cls]
        assert document_class_prior_exact(3, U, prior) == Fraction(1, 8)

    def test_float_form(self):
        """Test the float wrapper."""
        assert document_class_prior(3, S) == pytest.approx(1 - (2 / 3) ** 3)

    @pytest.mark.parametrize("n", [0, -1, 2.5, True])
    def test_bad_n(self, n):
        """Test that n must be an integer >= 1."""
        with pytest.raises(BadN):
            document_class_prior(n, S)

    def test_prior_table(self):
        """Test the table rows."""
        rows = prior_table(3)
        assert [row["n"] for row in rows] == [1, 2, 3]
        assert rows[1]["S"] == Fraction(5, 9)

    def test_enumeration_size(self):
        """Test that the oracle really walks 3^n sequences."""
        assert sum(1 for _ in itertools.product(ALL_CLASSES, repeat=4)) == 81
        assert sum(enumerate_document_prior(4).values()) == 1
