"""Metrics, published-result audit and dataset balancing."""

from .balance import augment_flip, class_weights, random_oversample, sample_weights
from .manifest import (
    DatasetManifest,
    ManifestRow,
    format_manifest,
    parse_manifest,
    read_manifest,
)
from .metrics import (
    AUDIT_TOLERANCE,
    AuditResult,
    ClassMetrics,
    ConfusionMatrix,
    EvaluationReport,
    PublishedRow,
    class_metrics,
    confusion,
    consistency_audit,
    evaluate_labels,
    evaluate_run,
    f1_score,
    macro_average,
    read_label_csv,
    read_published,
    write_label_csv,
)

__all__ = [
    "augment_flip", "class_weights", "random_oversample", "sample_weights",
    "DatasetManifest", "ManifestRow", "format_manifest", "parse_manifest", "read_manifest",
    "AUDIT_TOLERANCE", "AuditResult", "ClassMetrics", "ConfusionMatrix", "EvaluationReport",
    "PublishedRow", "class_metrics", "confusion", "consistency_audit", "evaluate_labels",
    "evaluate_run", "f1_score", "macro_average", "read_label_csv", "read_published",
    "write_label_csv",
]
