"""Mono audio buffers and short-time framing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, ParameterError

MIN_SAMPLE_RATE = 8000
WINDOWS = ("rectangular", "hann")


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ParameterError(f"audio buffer must be 1-D, got shape {x.shape}")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate < MIN_SAMPLE_RATE:
            raise ParameterError(
                f"sample rate must be an integer >= {MIN_SAMPLE_RATE} Hz, got {self.sample_rate}"
            )
        if x.size and (not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1.0):
            raise ParameterError("samples must be finite and within [-1, 1]")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate

    def slice_seconds(self, start_s: float, end_s: float) -> "AudioBuffer":
        lo = int(round(start_s * self.sample_rate))
        hi = int(round(end_s * self.sample_rate))
        return AudioBuffer(self.samples[max(lo, 0):min(hi, self.samples.size)], self.sample_rate)


@dataclass(frozen=True)
class FrameSpec:
    frame_len: int = 1024
    hop_len: int = 512
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop_len <= self.frame_len:
            raise ParameterError(
                f"need 0 < hop_len <= frame_len, got hop {self.hop_len}, frame {self.frame_len}"
            )
        if self.window not in WINDOWS:
            raise ParameterError(f"window must be one of {WINDOWS}, got {self.window!r}")


def window_weights(kind: str, n: int) -> np.ndarray:
    """Window of length ``n``. Hann is the periodic (DFT-even) form."""
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    raise ParameterError(f"unknown window {kind!r}")


def frame_count(n_samples: int, spec: FrameSpec) -> int:
    if n_samples < spec.frame_len:
        raise InsufficientDataError(
            f"buffer of {n_samples} samples is shorter than one frame ({spec.frame_len})"
        )
    return (n_samples - spec.frame_len) // spec.hop_len + 1


def raw_frames(buf: AudioBuffer, spec: FrameSpec) -> np.ndarray:
    """Unwindowed frames, shape (n_frames, frame_len)."""
    n = frame_count(len(buf), spec)
    idx = np.arange(n)[:, None] * spec.hop_len + np.arange(spec.frame_len)[None, :]
    return buf.samples[idx]


def frame_signal(buf: AudioBuffer, spec: FrameSpec) -> np.ndarray:
    """Windowed frames, shape (n_frames, frame_len)."""
    return raw_frames(buf, spec) * window_weights(spec.window, spec.frame_len)


def amplitude_series(buf: AudioBuffer, spec: FrameSpec) -> np.ndarray:
    """Peak absolute amplitude of each frame, taken before windowing."""
    return np.max(np.abs(raw_frames(buf, spec)), axis=1)
