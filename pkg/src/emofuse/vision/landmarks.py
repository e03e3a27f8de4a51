"""Selection and normalization of the 68-point facial landmark layout.

Indices below are 0-based, so landmark 37 of the usual 1-based numbering
is ``36`` here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from ..errors import DecodeError, DegenerateGeometryError, ShapeError

N_LANDMARKS = 68
N_SELECTED = 64

JAW = range(0, 17)
BROWS = range(17, 27)
NOSE = range(27, 36)
MOUTH = range(48, 68)
# (inner corner, outer corner, upper lid pair, lower lid pair)
LEFT_EYE = (39, 36, (37, 38), (40, 41))
RIGHT_EYE = (42, 45, (43, 44), (46, 47))

# Positions inside the 64-point selection.
SEL_EYES = 27
SEL_NOSE = 35
SEL_MOUTH = 44
SEL_NOSE_BASE = SEL_NOSE + (33 - 27)
SEL_UPPER_LIP_TOP = SEL_MOUTH + (51 - 48)
# Inner-lip pairs stacked vertically: (61,67), (62,66), (63,65).
SEL_INNER_LIP_PAIRS = tuple((SEL_MOUTH + a - 48, SEL_MOUTH + b - 48) for a, b in ((61, 67), (62, 66), (63, 65)))


@dataclass(frozen=True)
class FaceFeatures:
    selected_points: np.ndarray  # (64, 2): jaw 17, brows 10, eyes 8, nose 9, mouth 20
    normalized_vector: np.ndarray | None = None
    lip_gap: float | None = None
    philtrum_len: float | None = None

    def to_dict(self) -> dict:
        return {
            "selected_points": self.selected_points.tolist(),
            "normalized_vector": None if self.normalized_vector is None else self.normalized_vector.tolist(),
            "lip_gap": self.lip_gap,
            "philtrum_len": self.philtrum_len,
        }


def as_landmarks(points) -> np.ndarray:
    lm = np.asarray(points, dtype=np.float64)
    if lm.shape != (N_LANDMARKS, 2):
        raise ShapeError(f"expected {N_LANDMARKS} (x, y) landmarks, got array of shape {lm.shape}")
    if not np.all(np.isfinite(lm)):
        raise ShapeError("landmark coordinates must be finite")
    return lm


def parse_landmarks(text: str | bytes) -> np.ndarray:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"landmark file is not valid JSON: {exc.msg}", exc.pos) from None
    return as_landmarks(doc)


def _eye_points(lm: np.ndarray, eye) -> np.ndarray:
    inner, outer, upper, lower = eye
    return np.stack([lm[inner], lm[outer], lm[list(upper)].mean(axis=0), lm[list(lower)].mean(axis=0)])


def select_landmarks(points) -> FaceFeatures:
    lm = as_landmarks(points)
    selected = np.concatenate([
        lm[list(JAW)],
        lm[list(BROWS)],
        _eye_points(lm, LEFT_EYE),
        _eye_points(lm, RIGHT_EYE),
        lm[list(NOSE)],
        lm[list(MOUTH)],
    ])
    assert selected.shape == (N_SELECTED, 2)
    return FaceFeatures(selected)


def interocular_distance(f: FaceFeatures) -> float:
    p = f.selected_points
    left = (p[SEL_EYES] + p[SEL_EYES + 1]) / 2
    right = (p[SEL_EYES + 4] + p[SEL_EYES + 5]) / 2
    return float(np.hypot(*(right - left)))


def _checked_iod(f: FaceFeatures) -> float:
    iod = interocular_distance(f)
    spread = float(np.max(np.abs(f.selected_points - f.selected_points.mean(axis=0))))
    if not iod > 1e-12 * max(spread, 1.0):
        raise DegenerateGeometryError("eye centres coincide; cannot normalize by interocular distance")
    return iod


def normalize_features(f: FaceFeatures) -> np.ndarray:
    """Centre on the centroid, divide by interocular distance, flatten to 128 values."""
    iod = _checked_iod(f)
    centred = f.selected_points - f.selected_points.mean(axis=0)
    return (centred / iod).reshape(-1)


def mouth_metrics(f: FaceFeatures) -> tuple[float, float]:
    iod = _checked_iod(f)
    p = f.selected_points
    gap = np.mean([abs(p[lo, 1] - p[hi, 1]) for hi, lo in SEL_INNER_LIP_PAIRS])
    philtrum = np.hypot(*(p[SEL_UPPER_LIP_TOP] - p[SEL_NOSE_BASE]))
    return float(gap / iod), float(philtrum / iod)


def face_features(points) -> FaceFeatures:
    f = select_landmarks(points)
    lip_gap, philtrum = mouth_metrics(f)
    return replace(f, normalized_vector=normalize_features(f), lip_gap=lip_gap, philtrum_len=philtrum)
