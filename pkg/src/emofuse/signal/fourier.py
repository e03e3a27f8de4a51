"""Radix-2 FFT and the short-time spectrogram built on it."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import SizeError
from .buffer import AudioBuffer, FrameSpec, frame_signal


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=32)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=32)
def _twiddles(size: int) -> np.ndarray:
    t = np.exp(-2j * np.pi * np.arange(size // 2) / size)
    t.setflags(write=False)
    return t


def fft(x) -> np.ndarray:
    """Forward DFT along the last axis; the length must be a power of two.

    Iterative decimation-in-time: bit-reverse once, then merge blocks of
    doubling size. Leading axes are treated as a batch.
    """
    a = np.asarray(x, dtype=np.complex128)
    n = a.shape[-1]
    if not is_power_of_two(n):
        raise SizeError(f"fft length must be a power of two, got {n}")
    batch = a.shape[:-1]
    a = a[..., _bit_reversal(n)]
    size = 2
    while size <= n:
        half = size // 2
        blocks = a.reshape(*batch, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(size)
        a = np.concatenate((even + odd, even - odd), axis=-1).reshape(*batch, n)
        size *= 2
    return a


def ifft(spectrum) -> np.ndarray:
    X = np.asarray(spectrum, dtype=np.complex128)
    return np.conj(fft(np.conj(X))) / X.shape[-1]


@dataclass(frozen=True)
class Spectrogram:
    magnitudes: np.ndarray  # (frames, bins)
    bin_hz: float

    @property
    def frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def bins(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.bins) * self.bin_hz


def stft(buf: AudioBuffer, spec: FrameSpec) -> Spectrogram:
    if not is_power_of_two(spec.frame_len):
        raise SizeError(f"frame_len must be a power of two for the fast transform, got {spec.frame_len}")
    frames = frame_signal(buf, spec)
    mags = np.abs(fft(frames)[:, : spec.frame_len // 2 + 1])
    return Spectrogram(mags, buf.sample_rate / spec.frame_len)
