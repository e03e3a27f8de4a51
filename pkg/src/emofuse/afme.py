"""Audio-frame mean expression fusion.

Each clip is cut into 5-8 s windows. Per window the image side becomes an
empirical PMF over per-frame argmax labels, the speech side is a single
classifier distribution, and the top-3 sets of both are compared:
any shared emotion wins outright; otherwise the two top-1 emotions are
placed on the Plutchik wheel and either blended (close together) or
reported as sarcasm (far apart).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .emotions import Emotion, EmotionDistribution
from .errors import (
    AlignmentError,
    DataError,
    InsufficientDataError,
    ParameterError,
    UnmappedEmotionError,
)

SARCASM = "SARCASM"
Verdict = Union[Emotion, str]

RULE_INTERSECTION = "intersection"
RULE_BLEND = "blend"
RULE_NEUTRAL = "neutral_fallback"
RULE_SARCASM = "sarcasm"

# Eight 45-degree sectors; trust (45) and anticipation (315) have no class here.
DEFAULT_ANGLES = {
    Emotion.HAPPY: 0.0,
    Emotion.FEAR: 90.0,
    Emotion.SURPRISE: 135.0,
    Emotion.SAD: 180.0,
    Emotion.DISGUST: 225.0,
    Emotion.ANGER: 270.0,
}

_TIME_EPS = 1e-9
_ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class PlutchikWheel:
    angles: Mapping[Emotion, float] = field(default_factory=lambda: dict(DEFAULT_ANGLES))
    sarcasm_threshold_deg: float = 90.0
    blend_threshold_deg: float = 90.0

    def __post_init__(self):
        for name in ("sarcasm_threshold_deg", "blend_threshold_deg"):
            value = getattr(self, name)
            if not 0.0 < value <= 180.0:
                raise ParameterError(f"{name} must be in (0, 180], got {value}")
        if self.blend_threshold_deg > self.sarcasm_threshold_deg:
            raise ParameterError("blend threshold cannot exceed the sarcasm threshold")
        if Emotion.NEUTRAL in self.angles:
            raise ParameterError("Neutral has no place on the wheel")
        folded = [a % 360.0 for a in self.angles.values()]
        if len(set(folded)) != len(folded):
            raise ParameterError("wheel angles must be distinct")

    def angle(self, e: Emotion) -> float:
        try:
            return self.angles[e]
        except KeyError:
            raise UnmappedEmotionError(f"{Emotion(e).label} has no position on the wheel") from None


def wheel_distance(wheel: PlutchikWheel, a: Emotion, b: Emotion) -> float:
    d = abs(wheel.angle(a) - wheel.angle(b)) % 360.0
    return min(d, 360.0 - d)


def blend_emotions(e1: Emotion, s1: float, e2: Emotion, s2: float, wheel: PlutchikWheel) -> Emotion:
    """Mapped emotion nearest the confidence-weighted circular mean of two placements."""
    if e1 == e2:
        wheel.angle(e1)
        return e1
    t1, t2 = math.radians(wheel.angle(e1)), math.radians(wheel.angle(e2))
    if not s1 + s2 > 0:
        raise ParameterError("blend weights must have a positive sum")
    y = s1 * math.sin(t1) + s2 * math.sin(t2)
    x = s1 * math.cos(t1) + s2 * math.cos(t2)
    if math.hypot(x, y) < 1e-12:
        candidates = [e1, e2]  # antipodal, equal weights: no mean direction
    else:
        mean = math.degrees(math.atan2(y, x)) % 360.0
        dist = {}
        for e, a in wheel.angles.items():
            d = abs(a % 360.0 - mean)
            dist[e] = min(d, 360.0 - d)
        best = min(dist.values())
        candidates = [e for e, d in dist.items() if d - best <= _ANGLE_EPS]
    if len(candidates) == 1:
        return candidates[0]
    weighted = [(e, s) for e, s in ((e1, s1), (e2, s2)) if e in candidates]
    if weighted:
        top = max(s for _, s in weighted)
        preferred = [e for e, s in weighted if s == top]
        return min(preferred)
    return min(candidates)


# -- windows -----------------------------------------------------------------


@dataclass(frozen=True)
class WindowConfig:
    min_s: float = 5.0
    max_s: float = 8.0
    target_s: float = 6.0

    def __post_init__(self):
        if not 0 < self.min_s <= self.target_s <= self.max_s:
            raise ParameterError(
                f"need 0 < min <= target <= max, got {self.min_s}, {self.target_s}, {self.max_s}"
            )


def segment_windows(duration_s: float, min_s: float = 5.0, max_s: float = 8.0,
                    target_s: float = 6.0) -> list[tuple[float, float]]:
    """Greedy target-length windows; a short tail joins the previous window when it fits."""
    WindowConfig(min_s, max_s, target_s)
    if not duration_s > 0:
        raise ParameterError(f"duration must be positive, got {duration_s}")
    windows = []
    i = 0
    while (i + 1) * target_s <= duration_s + _TIME_EPS:
        windows.append((i * target_s, (i + 1) * target_s))
        i += 1
    start = i * target_s
    tail = duration_s - start
    if tail > _TIME_EPS:
        if tail < min_s and windows and (windows[-1][1] - windows[-1][0]) + tail <= max_s + _TIME_EPS:
            windows[-1] = (windows[-1][0], duration_s)
        else:
            windows.append((start, duration_s))
    elif windows:
        windows[-1] = (windows[-1][0], duration_s)
    return windows


# -- image side ----------------------------------------------------------------


@dataclass(frozen=True)
class FrameLabelStream:
    entries: tuple[tuple[float, EmotionDistribution], ...]

    def __post_init__(self):
        entries = tuple((float(t), d) for t, d in self.entries)
        times = [t for t, _ in entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataError("frame timestamps must be strictly increasing")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class FramePMF:
    mass: dict[Emotion, float]
    confidence: dict[Emotion, float]  # mean winning probability per label
    n_frames: int


def frame_pmf(stream: FrameLabelStream, window: tuple[float, float],
              include_end: bool = False) -> FramePMF:
    start, end = window
    counts: dict[Emotion, int] = {}
    conf_sum: dict[Emotion, float] = {}
    n = 0
    for t, dist in stream.entries:
        inside = start <= t < end or (include_end and t == end)
        if not inside:
            continue
        label = dist.argmax()
        counts[label] = counts.get(label, 0) + 1
        conf_sum[label] = conf_sum.get(label, 0.0) + dist[label]
        n += 1
    if n == 0:
        raise InsufficientDataError(f"no frames inside window [{start:g}, {end:g})")
    mass = {e: counts[e] / n for e in sorted(counts)}
    confidence = {e: conf_sum[e] / counts[e] for e in sorted(counts)}
    return FramePMF(mass, confidence, n)


@dataclass(frozen=True)
class ScoredTopK:
    entries: tuple[tuple[Emotion, float], ...]
    source: str

    def __post_init__(self):
        if len(self.entries) > 3:
            raise DataError("a top-k set holds at most 3 emotions")
        labels = [e for e, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise DataError("top-k emotions must be distinct")
        scores = [s for _, s in self.entries]
        if any(not 0.0 <= s <= 1.0 for s in scores):
            raise DataError("top-k scores must lie in [0, 1]")
        if any(b > a for a, b in zip(scores, scores[1:])):
            raise DataError("top-k scores must be in descending order")

    @property
    def labels(self) -> list[Emotion]:
        return [e for e, _ in self.entries]

    @property
    def top1(self) -> tuple[Emotion, float]:
        return self.entries[0]

    def score(self, e: Emotion) -> float:
        return dict(self.entries)[e]

    def to_json(self) -> list:
        return [[e.label, float(s)] for e, s in self.entries]


def top3(pmf: FramePMF, source: str = "image") -> ScoredTopK:
    ranked = sorted(
        (e for e, m in pmf.mass.items() if m > 0),
        key=lambda e: (-pmf.mass[e], -pmf.confidence.get(e, 0.0), int(e)),
    )
    if not ranked:
        raise InsufficientDataError("PMF has no mass")
    return ScoredTopK(tuple((e, pmf.mass[e]) for e in ranked[:3]), source)


def speech_top3(dist: EmotionDistribution) -> ScoredTopK:
    ranked = sorted((e for e in Emotion if dist[e] > 0), key=lambda e: (-dist[e], int(e)))
    if not ranked:
        raise InsufficientDataError("speech distribution has no mass")
    return ScoredTopK(tuple((e, dist[e]) for e in ranked[:3]), "speech")


# -- fusion --------------------------------------------------------------------


@dataclass(frozen=True)
class WindowVerdict:
    window: tuple[float, float]
    verdict: Verdict
    confidence: float
    image_top3: ScoredTopK
    speech_top3: ScoredTopK
    rule_fired: str

    @property
    def is_sarcasm(self) -> bool:
        return self.verdict == SARCASM

    @property
    def verdict_label(self) -> str:
        return SARCASM if self.is_sarcasm else self.verdict.label

    def to_dict(self) -> dict:
        return {
            "start_s": self.window[0],
            "end_s": self.window[1],
            "image_top3": self.image_top3.to_json(),
            "speech_top3": self.speech_top3.to_json(),
            "verdict": self.verdict_label,
            "sarcasm": self.is_sarcasm,
            "confidence": self.confidence,
            "rule": self.rule_fired,
        }


def afme_fuse(speech: ScoredTopK, image: ScoredTopK, wheel: PlutchikWheel | None = None,
              window: tuple[float, float] = (0.0, 0.0)) -> WindowVerdict:
    wheel = wheel or PlutchikWheel()
    if not speech.entries or not image.entries:
        raise InsufficientDataError("both modalities need at least one scored emotion")

    def verdict(v, conf, rule):
        return WindowVerdict(window, v, float(conf), image, speech, rule)

    common = set(speech.labels) & set(image.labels)
    if common:
        best = min(common, key=lambda e: (-(speech.score(e) + image.score(e)), int(e)))
        return verdict(best, (speech.score(best) + image.score(best)) / 2, RULE_INTERSECTION)

    (es, ss), (ei, si) = speech.top1, image.top1
    if es == Emotion.NEUTRAL or ei == Emotion.NEUTRAL:
        if es == Emotion.NEUTRAL and ei == Emotion.NEUTRAL:
            chosen = (ei, si) if si > ss else (es, ss)
        elif es == Emotion.NEUTRAL:
            chosen = (ei, si)
        else:
            chosen = (es, ss)
        return verdict(chosen[0], chosen[1], RULE_NEUTRAL)

    distance = wheel_distance(wheel, es, ei)
    if distance >= wheel.sarcasm_threshold_deg:
        return verdict(SARCASM, min(ss, si), RULE_SARCASM)
    if distance < wheel.blend_threshold_deg:
        # Two zero scores carry no preference: weigh them equally.
        ws, wi = (ss, si) if ss + si > 0 else (1.0, 1.0)
        blended = blend_emotions(es, ws, ei, wi, wheel)
    else:
        # Between the two thresholds: neither blend nor sarcasm, keep the stronger top-1.
        blended = es if (ss, -int(es)) > (si, -int(ei)) else ei
    return verdict(blended, (ss + si) / 2, RULE_BLEND)


SpeechResults = Union[Mapping[float, EmotionDistribution], Sequence[tuple[float, EmotionDistribution]]]


def run_afme(image_stream: FrameLabelStream, speech_results: SpeechResults, duration_s: float,
             wheel: PlutchikWheel | None = None,
             windows: WindowConfig | None = None) -> list[WindowVerdict]:
    """Fuse every window of a clip; ``speech_results`` is keyed by window start time."""
    wheel = wheel or PlutchikWheel()
    windows = windows or WindowConfig()
    spans = segment_windows(duration_s, windows.min_s, windows.max_s, windows.target_s)
    items = list(speech_results.items()) if isinstance(speech_results, Mapping) else list(speech_results)
    speech = [(float(t), d) for t, d in items]
    used = set()
    verdicts = []
    for idx, (start, end) in enumerate(spans):
        match = [i for i, (t, _) in enumerate(speech) if abs(t - start) <= 1e-6]
        name = f"window {idx} [{start:g}, {end:g})"
        if not match:
            raise AlignmentError(f"no speech result for {name}")
        used.update(match)
        try:
            pmf = frame_pmf(image_stream, (start, end), include_end=idx == len(spans) - 1)
        except InsufficientDataError:
            raise AlignmentError(f"no image frames inside {name}") from None
        verdicts.append(
            afme_fuse(speech_top3(speech[match[0]][1]), top3(pmf), wheel, window=(start, end))
        )
    extra = [speech[i][0] for i in range(len(speech)) if i not in used]
    if extra:
        raise AlignmentError(
            "speech results with no matching window start: " + ", ".join(f"{t:g}" for t in extra)
        )
    return verdicts


# -- JSON surfaces ---------------------------------------------------------------


def _distribution_entry(entry, what: str) -> tuple[float, EmotionDistribution]:
    if isinstance(entry, dict):
        t, probs = entry.get("timestamp", entry.get("start_s")), entry.get("probs")
    elif isinstance(entry, (list, tuple)) and len(entry) == 2 and isinstance(entry[1], (list, tuple)):
        t, probs = entry
    elif isinstance(entry, (list, tuple)) and len(entry) == 8:
        t, probs = entry[0], entry[1:]
    else:
        raise DataError(f"{what}: expected [time, [7 probabilities]], got {entry!r}")
    if not isinstance(t, (int, float)):
        raise DataError(f"{what}: time must be a number, got {t!r}")
    return float(t), EmotionDistribution.from_values(probs)


def parse_stream(doc, what: str = "stream") -> list[tuple[float, EmotionDistribution]]:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise DataError(f"{what}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, list):
        raise DataError(f"{what}: expected a JSON array")
    return [_distribution_entry(e, what) for e in doc]


def stream_to_json(entries: Iterable[tuple[float, EmotionDistribution]]) -> list:
    return [[float(t), d.tolist()] for t, d in entries]


def verdicts_document(clip_id: str, verdicts: Sequence[WindowVerdict]) -> dict:
    return {"clip_id": clip_id, "windows": [v.to_dict() for v in verdicts]}


def sarcasm_windows(verdicts: Sequence[WindowVerdict]) -> list[int]:
    return [i for i, v in enumerate(verdicts) if v.is_sarcasm]


def image_stream_from_probs(times, probs) -> FrameLabelStream:
    probs = np.asarray(probs, dtype=np.float64)
    return FrameLabelStream(tuple((float(t), EmotionDistribution(p)) for t, p in zip(times, probs)))
