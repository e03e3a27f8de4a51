"""Synthetic clip bundles with planted ground truth.

Image frames encode their emotion as a flat gray level and come with a
hand-built CNN that reads that level back; audio windows are pure tones
whose pitch class identifies the emotion, classified by a baseline trained
on independent tones. Everything is derived from one seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .afme import segment_windows
from .classify import BaselineClassifier, ConvBlockParams, ModelSpec, fit_baseline, save_model, softmax
from .classify.model import BLOCK_WIDTHS, HEAD_INPUTS, KERNEL
from .emotions import N_CLASSES, Emotion, EmotionDistribution
from .errors import ParameterError
from .evaluation import DatasetManifest, ManifestRow, format_manifest, write_label_csv
from .signal import AudioBuffer, FeatureConfig, encode_wav_pcm16, extract_features, feature_names
from .vision import RgbImage, encode_ppm

REGIMES = ("agree", "contrast", "mixed")
SAMPLE_RATE = 8000
CLIP_SECONDS = 12.0
FPS = 1.0
FRAME_SIDE = 64

# Hat centres on the normalized gray axis, one per class, 1/16 apart in threshold steps.
_STEP = 1.0 / 16.0
_LOGIT_SCALE = 4.0
# White keys C4..B4: seven distinct pitch classes.
TONES_HZ = (261.63, 293.66, 329.63, 349.23, 392.00, 440.00, 493.88)
MOUTH_OPEN = {Emotion.ANGER: 1.0, Emotion.DISGUST: 2.0, Emotion.FEAR: 6.0, Emotion.HAPPY: 4.0,
              Emotion.SAD: 1.5, Emotion.SURPRISE: 9.0, Emotion.NEUTRAL: 0.0}

CONTRAST_IMAGE = Emotion.HAPPY
CONTRAST_SPEECH = Emotion.ANGER


def gray_level(emotion: Emotion) -> int:
    return int(round(255 * (int(emotion) + 1) * 2 * _STEP))


def planted_model(logit_scale: float = _LOGIT_SCALE) -> ModelSpec:
    """A CNN whose output peaks at the class whose gray level fills the frame.

    Block 1 turns the pixel value into 15 ramps ``relu(x - m/16)``; blocks 2
    and 3 pass those channels through unchanged; the head combines three
    neighbouring ramps into a unit hat centred on each class level.
    """
    thresholds = np.arange(1, 16) * _STEP
    c = KERNEL // 2
    blocks = []
    cin = 1
    for i, cout in enumerate(BLOCK_WIDTHS):
        kernel = np.zeros((cout, cin, KERNEL, KERNEL))
        bias = np.zeros(cout)
        for j in range(len(thresholds)):
            kernel[j, 0 if i == 0 else j, c, c] = 1.0
        if i == 0:
            bias[: len(thresholds)] = -thresholds
        blocks.append(ConvBlockParams(kernel, bias, np.ones(cout), np.zeros(cout), np.zeros(cout), np.ones(cout)))
        cin = cout
    positions = HEAD_INPUTS // BLOCK_WIDTHS[-1]
    head = np.zeros((positions, BLOCK_WIDTHS[-1], N_CLASSES))
    for k in range(N_CLASSES):
        m = 2 * k + 2  # centre threshold index, 1-based
        for offset, coef in ((-1, 1.0), (0, -2.0), (1, 1.0)):
            head[:, m + offset - 1, k] = logit_scale * coef / _STEP / positions
    return ModelSpec(blocks, head.reshape(HEAD_INPUTS, N_CLASSES), np.zeros(N_CLASSES),
                     meta={"name": "planted-gray-levels"})


def planted_image_distribution(emotion: Emotion, logit_scale: float = _LOGIT_SCALE) -> EmotionDistribution:
    logits = np.zeros(N_CLASSES)
    logits[int(emotion)] = logit_scale
    return EmotionDistribution(softmax(logits))


def planted_speech_distribution(top: tuple[Emotion, ...]) -> EmotionDistribution:
    """0.7 / 0.12 / 0.08 on the given top-3, the rest spread evenly."""
    p = np.full(N_CLASSES, 0.1 / (N_CLASSES - len(top)))
    for e, mass in zip(top, (0.7, 0.12, 0.08)):
        p[int(e)] = mass
    return EmotionDistribution.from_values(p, renormalize=True)


def tone(emotion: Emotion, duration_s: float, rng: np.random.Generator,
         amplitude: float = 0.5, detune: float = 0.0) -> np.ndarray:
    n = int(round(duration_s * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE
    f = TONES_HZ[int(emotion)] * (1.0 + detune)
    x = amplitude * np.sin(2 * math.pi * f * t + rng.uniform(0, 2 * math.pi))
    return np.clip(x + rng.normal(0, 0.01, n), -1.0, 1.0)


def face_landmarks(emotion: Emotion, rng: np.random.Generator) -> np.ndarray:
    """A 68-point layout on a 100x100 canvas; mouth opening varies with emotion."""
    pts = np.zeros((68, 2))
    for i in range(17):
        a = math.pi * i / 16
        pts[i] = (50 - 40 * math.cos(a), 50 + 45 * math.sin(a))
    for i in range(5):
        pts[17 + i] = (20 + 5 * i, 25 - (2 - abs(i - 2)))
        pts[22 + i] = (60 + 5 * i, 25 - (2 - abs(i - 2)))
    for base, cx in ((36, 32), (42, 68)):
        pts[base:base + 6] = [(cx - 8, 35), (cx - 3, 32), (cx + 3, 32), (cx + 8, 35), (cx + 3, 38), (cx - 3, 38)]
    for i in range(4):
        pts[27 + i] = (50, 38 + 5 * i)
    for i in range(5):
        pts[31 + i] = (42 + 4 * i, 60 - (2 - abs(i - 2)))
    pts[48:60] = [(36, 75), (40, 71), (45, 70), (50, 71), (55, 70), (60, 71), (64, 75),
                  (60, 80), (55, 82), (50, 83), (45, 82), (40, 80)]
    h = MOUTH_OPEN[emotion] / 2
    pts[60:68] = [(40, 75), (45, 75 - h), (50, 75 - h), (55, 75 - h), (60, 75),
                  (55, 75 + h), (50, 75 + h), (45, 75 + h)]
    return np.round(pts + rng.normal(0, 0.2, pts.shape), 3)


def train_speech_baseline(seed: int, config: FeatureConfig | None = None,
                          per_class: int = 8, epochs: int = 600) -> BaselineClassifier:
    """Fit the softmax baseline on freshly drawn tones, independent of any clip."""
    config = config or FeatureConfig()
    rng = np.random.default_rng([seed, 1])
    rows, labels = [], []
    for e in Emotion:
        for _ in range(per_class):
            x = tone(e, rng.uniform(2.0, 6.0), rng, amplitude=rng.uniform(0.2, 0.8),
                     detune=rng.uniform(-0.005, 0.005))
            rows.append(extract_features(AudioBuffer(x, SAMPLE_RATE), config).to_vector())
            labels.append(int(e))
    return fit_baseline(np.array(rows), np.array(labels), epochs=epochs,
                        feature_names=feature_names(config.n_mfcc))


@dataclass(frozen=True)
class PlannedWindow:
    start_s: float
    end_s: float
    image: tuple[Emotion, ...]  # one label per frame
    speech: Emotion
    truth: str


@dataclass(frozen=True)
class PlannedClip:
    clip_id: str
    contrast: bool
    windows: tuple[PlannedWindow, ...]


def plan_clips(regime: str, seed: int, n_clips: int = 12, clip_s: float = CLIP_SECONDS,
               fps: float = FPS) -> list[PlannedClip]:
    if regime not in REGIMES:
        raise ParameterError(f"regime must be one of {REGIMES}, got {regime!r}")
    if n_clips < 1:
        raise ParameterError(f"need at least one clip, got {n_clips}")
    rng = np.random.default_rng([seed, 0])
    spans = segment_windows(clip_s)
    clips = []
    for c in range(n_clips):
        contrast = regime == "contrast" or (regime == "mixed" and c % 2 == 1)
        windows = []
        for w, (start, end) in enumerate(spans):
            times = _frame_times(start, end, fps, last=w == len(spans) - 1)
            if contrast and w == 0:
                windows.append(PlannedWindow(start, end, (CONTRAST_IMAGE,) * len(times),
                                             CONTRAST_SPEECH, "Sarcasm"))
                continue
            e = Emotion(int(rng.integers(N_CLASSES)))
            labels = [e] * len(times)
            if len(times) > 3 and rng.random() < 0.5:
                labels[int(rng.integers(len(times)))] = Emotion((int(e) + int(rng.integers(1, N_CLASSES))) % N_CLASSES)
            windows.append(PlannedWindow(start, end, tuple(labels), e, e.label))
        clips.append(PlannedClip(f"clip_{c:02d}", contrast, tuple(windows)))
    return clips


def _frame_times(start: float, end: float, fps: float, last: bool) -> list[float]:
    """Frame instants at (k + 0.5) / fps falling inside the window."""
    first = math.ceil(start * fps - 0.5 - 1e-9)
    times = []
    k = first
    while True:
        t = (k + 0.5) / fps
        if t > end or (t == end and not last):
            break
        if t >= start:
            times.append(t)
        k += 1
    return times


@dataclass(frozen=True)
class FixtureSummary:
    root: Path
    clips: list[PlannedClip]

    @property
    def sarcasm_keys(self) -> list[str]:
        return [f"{c.clip_id}:{i}" for c in self.clips for i, w in enumerate(c.windows) if w.truth == "Sarcasm"]


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n")


def write_fixture(out: str | Path, regime: str = "mixed", seed: int = 0, n_clips: int = 12,
                  clip_s: float = CLIP_SECONDS, fps: float = FPS,
                  landmarks: bool = True) -> FixtureSummary:
    """Write a complete bundle: clips, manifest, truth, planted streams, model and config."""
    root = Path(out)
    plans = plan_clips(regime, seed, n_clips, clip_s, fps)
    (root / "clips").mkdir(parents=True, exist_ok=True)
    (root / "planted").mkdir(exist_ok=True)
    rows, truth = [], {}
    for clip in plans:
        rng = np.random.default_rng([seed, 2, int(clip.clip_id.split("_")[1])])
        cdir = root / "clips" / clip.clip_id
        cdir.mkdir(exist_ok=True)
        audio, image_stream, speech_stream = [], [], []
        frame_idx = 0
        for w_idx, win in enumerate(clip.windows):
            last = w_idx == len(clip.windows) - 1
            audio.append(tone(win.speech, win.end_s - win.start_s, rng))
            if win.truth == "Sarcasm":
                top = (win.speech, Emotion.DISGUST, Emotion.SAD)
            else:
                others = [e for e in Emotion if e != win.speech]
                picks = rng.choice(len(others), size=2, replace=False)
                top = (win.speech, others[picks[0]], others[picks[1]])
            speech_stream.append([win.start_s, planted_speech_distribution(top).tolist()])
            truth[f"{clip.clip_id}:{w_idx}"] = win.truth
            for t, e in zip(_frame_times(win.start_s, win.end_s, fps, last), win.image):
                level = int(np.clip(gray_level(e) + rng.integers(-4, 5), 0, 255))
                name = f"frame_{frame_idx:03d}"
                px = np.full((FRAME_SIDE, FRAME_SIDE, 3), level, dtype=np.uint8)
                (cdir / f"{name}.ppm").write_bytes(encode_ppm(RgbImage(px)))
                if landmarks:
                    _dump(cdir / f"{name}.landmarks.json", face_landmarks(e, rng).tolist())
                rows.append(ManifestRow(f"clips/{clip.clip_id}/{name}.ppm", "image", e, "test",
                                        clip.clip_id, t))
                image_stream.append([t, planted_image_distribution(e).tolist()])
                frame_idx += 1
        samples = np.concatenate(audio)
        (cdir / "audio.wav").write_bytes(encode_wav_pcm16(AudioBuffer(samples, SAMPLE_RATE)))
        rows.append(ManifestRow(f"clips/{clip.clip_id}/audio.wav", "audio", None, "test", clip.clip_id))
        _dump(root / "planted" / f"{clip.clip_id}.image.json", image_stream)
        _dump(root / "planted" / f"{clip.clip_id}.speech.json", speech_stream)

    (root / "manifest.csv").write_text(format_manifest(DatasetManifest(tuple(rows))))
    (root / "truth.csv").write_text(write_label_csv(truth))
    save_model(planted_model(), root / "model.json")
    train_speech_baseline(seed).save(root / "baseline.json")
    _dump(root / "config.json", {"model_path": "model.json", "baseline_path": "baseline.json", "seed": seed})
    _dump(root / "fixture.json", {
        "regime": regime, "seed": seed, "clip_seconds": clip_s, "fps": fps,
        "clips": [c.clip_id for c in plans],
        "sarcasm_windows": [f"{c.clip_id}:{i}" for c in plans for i, w in enumerate(c.windows)
                            if w.truth == "Sarcasm"],
    })
    return FixtureSummary(root, plans)


__all__ = [
    "REGIMES", "TONES_HZ", "FixtureSummary", "PlannedClip", "PlannedWindow", "face_landmarks",
    "gray_level", "plan_clips", "planted_image_distribution", "planted_model",
    "planted_speech_distribution", "tone", "train_speech_baseline", "write_fixture",
]
