"""
SecClass - Evaluation
Confusion matrices, per-class precision / recall / F1, document-level
evaluation by the max rule, and document class priors.

MIT License - SecClass contributors, 2026
"""

import csv
import itertools
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from seclass.corpus import ALL_CLASSES, SecurityClass, derive_document_label
from seclass.errors import BadN, ConfigError, DataError, EmptyDocumentGroup

logger = logging.getLogger(__name__)

Number = Union[float, Fraction]


@dataclass(eq=False)
class ConfusionMatrix:
    """counts[true][predicted] over a fixed class list."""
    classes: Tuple[SecurityClass, ...]
    counts: np.ndarray

    def __post_init__(self):
        self.classes = tuple(SecurityClass(c) for c in self.classes)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        m = len(self.classes)
        if self.counts.shape != (m, m):
            raise DataError(f"Confusion matrix must be {m}x{m}, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise DataError("Confusion matrix counts must be non-negative")
        self.counts.setflags(write=False)

    @classmethod
    def from_labels(
        cls,
        y_true: Sequence[SecurityClass],
        y_pred: Sequence[SecurityClass],
        classes: Sequence[SecurityClass] = ALL_CLASSES,
    ) -> "ConfusionMatrix":
        if len(y_true) != len(y_pred):
            raise DataError(f"{len(y_true)} labels but {len(y_pred)} predictions")
        position = {SecurityClass(c): i for i, c in enumerate(classes)}
        counts = np.zeros((len(position), len(position)), dtype=np.int64)
        for t, p in zip(y_true, y_pred):
            counts[position[SecurityClass(t)], position[SecurityClass(p)]] += 1
        return cls(tuple(position), counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def _i(self, c: SecurityClass) -> int:
        return self.classes.index(SecurityClass(c))

    def tp(self, c: SecurityClass) -> int:
        i = self._i(c)
        return int(self.counts[i, i])

    def fp(self, c: SecurityClass) -> int:
        i = self._i(c)
        return int(self.counts[:, i].sum() - self.counts[i, i])

    def fn(self, c: SecurityClass) -> int:
        i = self._i(c)
        return int(self.counts[i, :].sum() - self.counts[i, i])

    def support(self, c: SecurityClass) -> int:
        return int(self.counts[self._i(c), :].sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise DataError("Cannot add confusion matrices over different class lists")
        return ConfusionMatrix(self.classes, self.counts + other.counts)

    def to_dict(self) -> dict:
        return {
            "classes": [c.name for c in self.classes],
            "counts": self.counts.tolist(),
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ConfusionMatrix":
        return cls(tuple(SecurityClass.parse(c) for c in data["classes"]), np.array(data["counts"]))


def _ratio(num: int, den: int, exact: bool) -> Number:
    if den == 0:
        return Fraction(0) if exact else 0.0
    return Fraction(num, den) if exact else num / den


def f1_per_class(cm: ConfusionMatrix, exact: bool = False) -> Dict[SecurityClass, Number]:
    """F1 = 2TP / (2TP + FP + FN); 0 when the denominator is 0."""
    return {
        c: _ratio(2 * cm.tp(c), 2 * cm.tp(c) + cm.fp(c) + cm.fn(c), exact)
        for c in cm.classes
    }


def precision_recall_f1(cm: ConfusionMatrix) -> Dict[SecurityClass, Tuple[float, float, float]]:
    f1 = f1_per_class(cm)
    return {
        c: (
            _ratio(cm.tp(c), cm.tp(c) + cm.fp(c), False),
            _ratio(cm.tp(c), cm.tp(c) + cm.fn(c), False),
            f1[c],
        )
        for c in cm.classes
    }


def macro_f1_score(y_true: Sequence[SecurityClass], y_pred: Sequence[SecurityClass]) -> float:
    """Unweighted mean F1 over U, C and S."""
    scores = f1_per_class(ConfusionMatrix.from_labels(y_true, y_pred))
    return float(sum(scores.values()) / len(scores))


@dataclass
class EvalReport:
    """Per-class metrics for one evaluation (paragraph or document level)."""
    precision: Dict[SecurityClass, float]
    recall: Dict[SecurityClass, float]
    f1: Dict[SecurityClass, float]
    support: Dict[SecurityClass, int]
    macro_f1: float
    confusion: ConfusionMatrix
    level: str = "paragraph"
    undefined: List[str] = field(default_factory=list)
    provenance: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_confusion(
        cls, cm: ConfusionMatrix, level: str = "paragraph", provenance: Optional[Mapping] = None,
    ) -> "EvalReport":
        prf = precision_recall_f1(cm)
        undefined = []
        for c in cm.classes:
            if cm.tp(c) + cm.fp(c) == 0:
                undefined.append(f"precision:{c.name}")
            if cm.tp(c) + cm.fn(c) == 0:
                undefined.append(f"recall:{c.name}")
        f1 = {c: v[2] for c, v in prf.items()}
        return cls(
            precision={c: v[0] for c, v in prf.items()},
            recall={c: v[1] for c, v in prf.items()},
            f1=f1,
            support={c: cm.support(c) for c in cm.classes},
            macro_f1=float(sum(f1.values()) / len(f1)),
            confusion=cm,
            level=level,
            undefined=undefined,
            provenance=dict(provenance or {}),
        )

    @classmethod
    def from_labels(cls, y_true, y_pred, **kwargs) -> "EvalReport":
        return cls.from_confusion(ConfusionMatrix.from_labels(y_true, y_pred), **kwargs)

    @property
    def total(self) -> int:
        return self.confusion.total

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "classes": {
                c.name: {
                    "precision": self.precision[c],
                    "recall": self.recall[c],
                    "f1": self.f1[c],
                    "support": self.support[c],
                }
                for c in self.confusion.classes
            },
            "macro_f1": self.macro_f1,
            "total": self.total,
            "undefined": list(self.undefined),
            "confusion": self.confusion.to_dict(),
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalReport":
        per_class = {SecurityClass.parse(k): v for k, v in data["classes"].items()}
        return cls(
            precision={c: float(v["precision"]) for c, v in per_class.items()},
            recall={c: float(v["recall"]) for c, v in per_class.items()},
            f1={c: float(v["f1"]) for c, v in per_class.items()},
            support={c: int(v["support"]) for c, v in per_class.items()},
            macro_f1=float(data["macro_f1"]),
            confusion=ConfusionMatrix.from_dict(data["confusion"]),
            level=data.get("level", "paragraph"),
            undefined=list(data.get("undefined", [])),
            provenance=dict(data.get("provenance", {})),
        )

    def write_json(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def write_csv(self, path: Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["class", "precision", "recall", "f1", "support"])
            for c in self.confusion.classes:
                writer.writerow([
                    c.name, f"{self.precision[c]:.6f}", f"{self.recall[c]:.6f}",
                    f"{self.f1[c]:.6f}", self.support[c],
                ])

    @classmethod
    def load(cls, path: Path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def document_level_eval(
    predictions_by_document: Mapping[str, Sequence[SecurityClass]],
    true_labels: Mapping[str, SecurityClass],
    provenance: Optional[Mapping] = None,
) -> EvalReport:
    """
    Evaluate documents: each document's predicted label is the max of
    its paragraphs' predicted labels.
    """
    missing = set(true_labels) ^ set(predictions_by_document)
    if missing:
        raise DataError(
            f"{len(missing)} documents lack either predictions or a true label",
            documents=sorted(missing)[:10],
        )
    y_true, y_pred = [], []
    for key in sorted(true_labels):
        predicted = predictions_by_document[key]
        if not predicted:
            raise EmptyDocumentGroup(f"Document {key} has no predicted paragraphs", document=key)
        y_true.append(SecurityClass(true_labels[key]))
        y_pred.append(derive_document_label(predicted))
    return EvalReport.from_labels(y_true, y_pred, level="document", provenance=provenance)


# -- Document class priors -----------------------------------------------------

def _paragraph_prior(prior: Optional[Mapping[SecurityClass, Number]]) -> Dict[SecurityClass, Fraction]:
    if prior is None:
        return {c: Fraction(1, 3) for c in ALL_CLASSES}
    exact = {c: Fraction(prior.get(c, 0)) for c in ALL_CLASSES}
    if any(p < 0 for p in exact.values()):
        raise ConfigError("Paragraph class probabilities must be non-negative")
    if abs(float(sum(exact.values())) - 1.0) > 1e-9:
        raise ConfigError(f"Paragraph class probabilities must sum to 1, got {float(sum(exact.values()))}")
    # Renormalize so the exact arithmetic sums to exactly 1.
    total = sum(exact.values())
    return {c: p / total for c, p in exact.items()}


def _check_n(n: int) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise BadN(f"Paragraph count must be an integer >= 1, got {n!r}", n=n)


def document_class_prior_exact(
    n: int,
    cls: SecurityClass,
    paragraph_prior: Optional[Mapping[SecurityClass, Number]] = None,
) -> Fraction:
    """
    Probability that an n-paragraph document is labeled cls, with
    paragraph classes drawn iid from paragraph_prior (uniform by
    default) and the document labeled by the max rule.
    """
    _check_n(n)
    p = _paragraph_prior(paragraph_prior)
    at_most_u = p[SecurityClass.U] ** n
    at_most_c = (p[SecurityClass.U] + p[SecurityClass.C]) ** n
    cls = SecurityClass(cls)
    if cls is SecurityClass.U:
        return at_most_u
    if cls is SecurityClass.C:
        return at_most_c - at_most_u
    return 1 - at_most_c


def document_class_prior(
    n: int,
    cls: SecurityClass,
    paragraph_prior: Optional[Mapping[SecurityClass, Number]] = None,
) -> float:
    return float(document_class_prior_exact(n, cls, paragraph_prior))


def enumerate_document_prior(
    n: int, paragraph_prior: Optional[Mapping[SecurityClass, Number]] = None,
) -> Dict[SecurityClass, Fraction]:
    """Exact priors by walking all 3^n label sequences."""
    _check_n(n)
    p = _paragraph_prior(paragraph_prior)
    totals = {c: Fraction(0) for c in ALL_CLASSES}
    for sequence in itertools.product(ALL_CLASSES, repeat=n):
        weight = Fraction(1)
        for label in sequence:
            weight *= p[label]
        totals[max(sequence)] += weight
    return totals


def prior_table(
    max_n: int, paragraph_prior: Optional[Mapping[SecurityClass, Number]] = None,
) -> List[Dict[str, object]]:
    """Rows of (n, Pr(U), Pr(C), Pr(S)) for n = 1..max_n."""
    _check_n(max_n)
    rows = []
    for n in range(1, max_n + 1):
        row: Dict[str, object] = {"n": n}
        for c in ALL_CLASSES:
            row[c.name] = document_class_prior_exact(n, c, paragraph_prior)
        rows.append(row)
    return rows


def labels_of(items: Iterable) -> List[SecurityClass]:
    return [SecurityClass(item.label) for item in items]
