"""Dataset manifests: one CSV row per image frame or audio file."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from ..emotions import Emotion
from ..errors import DataError, DecodeError

MODALITIES = ("image", "audio")
SPLITS = ("train", "test")
UNLABELED = "unlabeled"
COLUMNS = ("path", "modality", "label", "split", "clip_id", "timestamp_s")


@dataclass(frozen=True)
class ManifestRow:
    path: str
    modality: str
    label: Emotion | None
    split: str = "train"
    clip_id: str = ""
    timestamp_s: float | None = None

    def __post_init__(self):
        if not self.path:
            raise DataError("manifest path must be non-empty")
        if self.modality not in MODALITIES:
            raise DataError(f"modality must be one of {MODALITIES}, got {self.modality!r}")
        if self.split not in SPLITS:
            raise DataError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.label is not None:
            object.__setattr__(self, "label", Emotion.parse(self.label))
        if self.timestamp_s is not None and not math.isfinite(self.timestamp_s):
            raise DataError(f"timestamp must be finite, got {self.timestamp_s}")

    @property
    def label_name(self) -> str:
        return UNLABELED if self.label is None else self.label.label


@dataclass(frozen=True)
class DatasetManifest:
    rows: tuple[ManifestRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def labeled(self) -> list[ManifestRow]:
        return [r for r in self.rows if r.label is not None]

    def class_counts(self) -> dict[Emotion, int]:
        counts = Counter(r.label for r in self.labeled())
        return {e: counts[e] for e in sorted(counts)}

    def filter(self, *, modality: str | None = None, split: str | None = None) -> "DatasetManifest":
        return DatasetManifest(tuple(
            r for r in self.rows
            if (modality is None or r.modality == modality) and (split is None or r.split == split)
        ))


def parse_manifest(text: str) -> DatasetManifest:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != COLUMNS:
        raise DecodeError(f"manifest header must be {','.join(COLUMNS)}, got {reader.fieldnames}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        try:
            label = rec["label"].strip()
            ts = rec["timestamp_s"].strip()
            rows.append(ManifestRow(
                path=rec["path"].strip(),
                modality=rec["modality"].strip(),
                label=None if label.lower() in ("", UNLABELED) else label,
                split=rec["split"].strip() or "train",
                clip_id=rec["clip_id"].strip(),
                timestamp_s=float(ts) if ts else None,
            ))
        except (DataError, ValueError, AttributeError) as exc:
            raise DataError(f"manifest line {lineno}: {exc}") from None
    return DatasetManifest(tuple(rows))


def format_manifest(manifest: DatasetManifest | Iterable[ManifestRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in manifest:
        ts = "" if r.timestamp_s is None else repr(float(r.timestamp_s))
        w.writerow([r.path, r.modality, r.label_name, r.split, r.clip_id, ts])
    return buf.getvalue()


def read_manifest(path: str | Path) -> DatasetManifest:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise DecodeError(f"cannot read manifest {path}: {exc}") from None
    return parse_manifest(text)
