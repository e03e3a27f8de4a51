"""The seven emotion classes and the probability vector over them."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

N_CLASSES = 7


class Emotion(IntEnum):
    # Ordinals are part of the contract: every tie-break falls back to them.
    ANGER = 0
    DISGUST = 1
    FEAR = 2
    HAPPY = 3
    SAD = 4
    SURPRISE = 5
    NEUTRAL = 6

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, value: "str | int | Emotion") -> "Emotion":
        if isinstance(value, Emotion):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower()
        try:
            return _ALIASES[key]
        except KeyError:
            raise DataError(f"unknown emotion label {value!r}") from None


_ALIASES = {e.name.lower(): e for e in Emotion}
_ALIASES.update(
    {
        "angry": Emotion.ANGER,
        "disgusted": Emotion.DISGUST,
        "fearful": Emotion.FEAR,
        "happiness": Emotion.HAPPY,
        "joy": Emotion.HAPPY,
        "sadness": Emotion.SAD,
        "surprised": Emotion.SURPRISE,
        "surprises": Emotion.SURPRISE,
        "calm": Emotion.NEUTRAL,
    }
)

LABELS = tuple(e.label for e in Emotion)


@dataclass(frozen=True)
class EmotionDistribution:
    """Probabilities over the seven classes, indexed by ``Emotion`` ordinal."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (N_CLASSES,):
            raise DataError(f"distribution must have {N_CLASSES} entries, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise DataError("distribution entries must be finite and within [0, 1]")
        if abs(p.sum() - 1.0) > 1e-9:
            raise DataError(f"distribution sums to {p.sum():.12g}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_values(cls, values: Sequence[float], renormalize: bool = False) -> "EmotionDistribution":
        p = np.asarray(values, dtype=np.float64)
        if renormalize:
            total = p.sum()
            if not total > 0:
                raise DataError("cannot renormalize a distribution with zero mass")
            p = p / total
        return cls(p)

    @classmethod
    def uniform(cls) -> "EmotionDistribution":
        return cls(np.full(N_CLASSES, 1.0 / N_CLASSES))

    def __getitem__(self, emotion: Emotion | int) -> float:
        return float(self.probs[int(emotion)])

    def argmax(self) -> Emotion:
        # np.argmax returns the first maximum, i.e. the lowest ordinal on ties.
        return Emotion(int(np.argmax(self.probs)))

    def as_dict(self) -> dict[str, float]:
        return {e.label: float(self.probs[e]) for e in Emotion}

    def tolist(self) -> list[float]:
        return [float(x) for x in self.probs]


def one_hot(emotion: Emotion) -> np.ndarray:
    v = np.zeros(N_CLASSES)
    v[int(emotion)] = 1.0
    return v


def parse_labels(values: Iterable) -> list[Emotion]:
    return [Emotion.parse(v) for v in values]
