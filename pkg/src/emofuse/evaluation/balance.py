"""Class re-weighting, random oversampling and flip augmentation."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..emotions import Emotion
from ..errors import DataError, ParameterError
from ..vision.image import GrayImage
from .manifest import DatasetManifest


def class_weights(counts: Mapping[Emotion | str, int]) -> dict[Emotion, float | None]:
    """Inverse-frequency weights ``N / (K * N_c)`` over the K present classes."""
    parsed: dict[Emotion, int] = {}
    for key, n in counts.items():
        if n < 0 or int(n) != n:
            raise ParameterError(f"class count must be a non-negative integer, got {n}")
        parsed[Emotion.parse(key)] = parsed.get(Emotion.parse(key), 0) + int(n)
    present = {e: n for e, n in parsed.items() if n > 0}
    if not present:
        raise DataError("no class has a positive count")
    total, k = sum(present.values()), len(present)
    return {e: (total / (k * n) if n > 0 else None) for e, n in sorted(parsed.items())}


def sample_weights(labels, weights: Mapping[Emotion, float | None]) -> np.ndarray:
    out = []
    for y in labels:
        w = weights.get(Emotion.parse(y))
        if w is None:
            raise DataError(f"no weight for class {Emotion.parse(y).label}")
        out.append(w)
    return np.asarray(out, dtype=np.float64)


def random_oversample(manifest: DatasetManifest, seed: int | None = 0) -> DatasetManifest:
    """Append uniformly resampled rows until every labeled class matches the largest.

    Original rows keep their order; the additions follow, class by class
    in ordinal order, so a fixed seed reproduces the output exactly.
    """
    counts = manifest.class_counts()
    if not counts:
        raise DataError("manifest has no labeled rows to balance")
    target = max(counts.values())
    rng = np.random.default_rng(seed)
    extra = []
    for emotion, n in counts.items():
        if n == target:
            continue
        pool = [r for r in manifest.rows if r.label == emotion]
        picks = rng.integers(0, len(pool), size=target - n)
        extra.extend(pool[i] for i in picks)
    return DatasetManifest(manifest.rows + tuple(extra))


def augment_flip(img: GrayImage) -> GrayImage:
    """Horizontal mirror: pixel (x, y) moves to (w - 1 - x, y)."""
    return GrayImage(np.ascontiguousarray(img.pixels[:, ::-1]))
