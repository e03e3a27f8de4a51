"""Confusion matrices, per-class metrics and the published-F1 audit."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..emotions import LABELS, N_CLASSES, Emotion
from ..errors import AlignmentError, DataError, DecodeError, InsufficientDataError

AUDIT_TOLERANCE = 0.015
SARCASM_LABEL = "sarcasm"


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (7, 7) int64, rows = truth, columns = predicted

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (N_CLASSES, N_CLASSES):
            raise DataError(f"confusion matrix must be {N_CLASSES}x{N_CLASSES}, got {c.shape}")
        if np.any(c < 0):
            raise DataError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def tolist(self) -> list[list[int]]:
        return self.counts.tolist()


def confusion(pairs: Iterable[tuple[Emotion | str | int, Emotion | str | int]]) -> ConfusionMatrix:
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for truth, pred in pairs:
        counts[int(Emotion.parse(truth)), int(Emotion.parse(pred))] += 1
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassMetrics:
    emotion: Emotion
    n_truth: int
    n_classified: int
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return {
            "class": self.emotion.label,
            "n_truth": self.n_truth,
            "n_classified": self.n_classified,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def f1_score(precision: float | None, recall: float | None) -> float | None:
    if precision is None or recall is None:
        return None
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def class_metrics(cm: ConfusionMatrix) -> list[ClassMetrics]:
    """One-vs-rest metrics per class; ratios with a zero denominator are None."""
    total = cm.total
    if total == 0:
        raise InsufficientDataError("confusion matrix is empty")
    c = cm.counts
    rows, cols, diag = c.sum(axis=1), c.sum(axis=0), np.diag(c)
    out = []
    for k in range(N_CLASSES):
        tp = int(diag[k])
        fp = int(cols[k]) - tp
        fn = int(rows[k]) - tp
        tn = total - tp - fp - fn
        precision = tp / (tp + fp) if tp + fp else None
        recall = tp / (tp + fn) if tp + fn else None
        out.append(ClassMetrics(
            Emotion(k), int(rows[k]), int(cols[k]), (tp + tn) / total,
            precision, recall, f1_score(precision, recall),
        ))
    return out


def macro_average(metrics: Sequence[ClassMetrics]) -> dict[str, float | None]:
    def mean(values):
        defined = [v for v in values if v is not None]
        return float(np.mean(defined)) if defined else None

    return {
        "precision": mean(m.precision for m in metrics),
        "recall": mean(m.recall for m in metrics),
        "f1": mean(m.f1 for m in metrics),
    }


# -- audit -------------------------------------------------------------------


@dataclass(frozen=True)
class PublishedRow:
    name: str
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class AuditResult:
    name: str
    published_f1: float
    recomputed_f1: float
    delta: float
    consistent: bool

    def to_dict(self) -> dict:
        return {
            "class": self.name,
            "published_f1": self.published_f1,
            "recomputed_f1": round(self.recomputed_f1, 6),
            "delta": round(self.delta, 6),
            "consistent": self.consistent,
        }


def consistency_audit(rows: Iterable[PublishedRow],
                      tolerance: float = AUDIT_TOLERANCE) -> list[AuditResult]:
    """Check each published F1 against the harmonic mean of its precision and recall."""
    out = []
    for r in rows:
        recomputed = f1_score(r.precision, r.recall)
        delta = abs(recomputed - r.f1)
        out.append(AuditResult(r.name, r.f1, recomputed, delta, delta <= tolerance))
    return out


def read_published(text: str) -> list[PublishedRow]:
    """Parse a ``class,precision,recall,f1`` CSV of published metrics."""
    reader = csv.DictReader(io.StringIO(text))
    needed = {"class", "precision", "recall", "f1"}
    if reader.fieldnames is None or not needed <= set(reader.fieldnames):
        raise DecodeError(f"published metrics need columns {sorted(needed)}, got {reader.fieldnames}")
    try:
        return [PublishedRow(r["class"], float(r["precision"]), float(r["recall"]), float(r["f1"]))
                for r in reader]
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"bad published metrics row: {exc}") from None


# -- run evaluation ----------------------------------------------------------


def read_label_csv(text: str) -> dict[str, str]:
    """Read a ``key,label`` file into an ordered mapping."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["key", "label"]:
        raise DecodeError(f"label file header must be exactly 'key,label', got {header}")
    labels: dict[str, str] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise DecodeError(f"line {lineno}: expected 2 fields, got {len(row)}")
        key, label = row[0].strip(), row[1].strip()
        if key in labels:
            raise DataError(f"line {lineno}: duplicate key {key!r}")
        labels[key] = label
    return labels


def write_label_csv(labels: Mapping[str, str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "label"])
    for key, label in labels.items():
        w.writerow([key, label])
    return buf.getvalue()


def _is_sarcasm(label: str) -> bool:
    return label.strip().lower() == SARCASM_LABEL


@dataclass(frozen=True)
class EvaluationReport:
    confusion: ConfusionMatrix
    per_class: list[ClassMetrics]
    macro: dict[str, float | None]
    accuracy: float
    sarcasm: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "labels": list(LABELS),
            "confusion": self.confusion.tolist(),
            "per_class": [m.to_dict() for m in self.per_class],
            "macro": self.macro,
            "accuracy": self.accuracy,
            "sarcasm": self.sarcasm,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "n_truth", "n_classified", "accuracy", "precision", "recall", "f1"])
        for m in self.per_class:
            w.writerow([m.emotion.label, m.n_truth, m.n_classified]
                       + ["" if v is None else f"{v:.4f}" for v in (m.accuracy, m.precision, m.recall, m.f1)])
        return buf.getvalue()


def evaluate_labels(truth: Mapping[str, str], predicted: Mapping[str, str]) -> EvaluationReport:
    """Score predictions against truth over shared keys.

    Windows whose truth or prediction is sarcasm sit outside the 7-class
    confusion matrix and are tallied separately as a detection task.
    """
    missing = sorted(set(truth) - set(predicted))
    extra = sorted(set(predicted) - set(truth))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing predictions for {missing}")
        if extra:
            parts.append(f"predictions without truth for {extra}")
        raise AlignmentError("; ".join(parts))
    pairs = []
    sarcasm = {"tp": 0, "fp": 0, "fn": 0}
    for key, t in truth.items():
        p = predicted[key]
        ts, ps = _is_sarcasm(t), _is_sarcasm(p)
        if ts and ps:
            sarcasm["tp"] += 1
        elif ps:
            sarcasm["fp"] += 1
        elif ts:
            sarcasm["fn"] += 1
        else:
            try:
                pairs.append((Emotion.parse(t), Emotion.parse(p)))
            except ValueError as exc:
                raise DataError(f"key {key!r}: {exc}") from None
    cm = confusion(pairs)
    metrics = class_metrics(cm)
    accuracy = float(np.trace(cm.counts) / cm.total)
    return EvaluationReport(cm, metrics, macro_average(metrics), accuracy, sarcasm)


def evaluate_run(truth_file: str | Path, prediction_file: str | Path) -> EvaluationReport:
    try:
        truth = read_label_csv(Path(truth_file).read_text())
        predicted = read_label_csv(Path(prediction_file).read_text())
    except (OSError, UnicodeDecodeError) as exc:
        raise DecodeError(f"cannot read label file: {exc}") from None
    return evaluate_labels(truth, predicted)
