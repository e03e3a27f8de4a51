"""Frame-level audio features: ZCR, RMS, mel spectrogram, MFCC and chroma."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import InsufficientDataError, ParameterError
from .buffer import AudioBuffer, FrameSpec, raw_frames
from .fourier import Spectrogram, stft

LOG_FLOOR = 1e-10
CHROMA_REF_HZ = 261.63  # C4
CHROMA_MIN_HZ = 20.0
N_CHROMA = 12


def zero_crossing_rate(frame) -> float:
    x = np.asarray(frame, dtype=np.float64)
    if x.size < 2:
        raise InsufficientDataError("zero-crossing rate needs at least 2 samples")
    positive = x >= 0  # zero counts as positive
    return float(np.count_nonzero(positive[1:] != positive[:-1]) / (x.size - 1))


def rms(frame) -> float:
    x = np.asarray(frame, dtype=np.float64)
    if x.size == 0:
        raise InsufficientDataError("rms of an empty frame")
    return float(np.sqrt(np.mean(x * x)))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular filters with centres equally spaced on the mel scale.

    ``edges_hz`` holds ``n_mels + 2`` points; filter ``j`` rises from
    ``edges_hz[j]`` to a peak of 1 at ``edges_hz[j + 1]`` and falls to zero at
    ``edges_hz[j + 2]``. No area normalization is applied.
    """

    n_mels: int
    fmin: float
    fmax: float
    edges_hz: np.ndarray
    triangles: np.ndarray  # (n_mels, bins), sampled at the FFT bin frequencies

    @property
    def centers_hz(self) -> np.ndarray:
        return self.edges_hz[1:-1]

    def weights_at(self, freqs) -> np.ndarray:
        f = np.asarray(freqs, dtype=np.float64)[None, :]
        lo = self.edges_hz[:-2, None]
        mid = self.edges_hz[1:-1, None]
        hi = self.edges_hz[2:, None]
        rising = (f - lo) / (mid - lo)
        falling = (hi - f) / (hi - mid)
        return np.maximum(0.0, np.minimum(rising, falling))


@lru_cache(maxsize=16)
def _cached_filterbank(n_mels, frame_len, sample_rate, fmin, fmax) -> MelFilterbank:
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bank = MelFilterbank(n_mels, fmin, fmax, edges, np.empty(0))
    tri = bank.weights_at(np.arange(frame_len // 2 + 1) * sample_rate / frame_len)
    edges.setflags(write=False)
    tri.setflags(write=False)
    return MelFilterbank(n_mels, fmin, fmax, edges, tri)


def mel_filterbank(n_mels: int, frame_len: int, sample_rate: int,
                   fmin: float = 0.0, fmax: float | None = None) -> MelFilterbank:
    if fmax is None:
        fmax = sample_rate / 2.0
    if not (0.0 <= fmin < fmax <= sample_rate / 2.0):
        raise ParameterError(f"need 0 <= fmin < fmax <= {sample_rate / 2}, got fmin={fmin}, fmax={fmax}")
    if n_mels < 1:
        raise ParameterError("n_mels must be positive")
    return _cached_filterbank(int(n_mels), int(frame_len), int(sample_rate), float(fmin), float(fmax))


def mel_spectrogram(buf: AudioBuffer, spec: FrameSpec, n_mels: int = 40,
                    fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Power spectrogram projected onto the mel filterbank, shape (frames, n_mels)."""
    spectrogram = stft(buf, spec)
    bank = mel_filterbank(n_mels, spec.frame_len, buf.sample_rate, fmin, fmax)
    return (spectrogram.magnitudes ** 2) @ bank.triangles.T


@lru_cache(maxsize=16)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis, rows are output coefficients."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    basis = np.cos(np.pi * k * (2 * i + 1) / (2 * n)) * np.sqrt(2.0 / n)
    basis[0] /= np.sqrt(2.0)
    basis.setflags(write=False)
    return basis


def mfcc(buf: AudioBuffer, spec: FrameSpec, n_mels: int = 40, n_mfcc: int = 13,
         fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    if not 1 <= n_mfcc <= n_mels:
        raise ParameterError(f"need 1 <= n_mfcc <= n_mels, got n_mfcc={n_mfcc}, n_mels={n_mels}")
    log_mel = np.log(mel_spectrogram(buf, spec, n_mels, fmin, fmax) + LOG_FLOOR)
    return log_mel @ dct_matrix(n_mels)[:n_mfcc].T


@lru_cache(maxsize=16)
def _pitch_classes(n_bins: int, bin_hz: float) -> np.ndarray:
    freqs = np.arange(n_bins) * bin_hz
    pcs = np.full(n_bins, -1, dtype=np.int64)
    audible = freqs >= CHROMA_MIN_HZ
    semis = 12.0 * np.log2(freqs[audible] / CHROMA_REF_HZ)
    pcs[audible] = np.mod(np.floor(semis + 0.5).astype(np.int64), N_CHROMA)
    pcs.setflags(write=False)
    return pcs


def chroma_frames(magnitudes: np.ndarray, bin_hz: float) -> np.ndarray:
    """Chroma vectors for a (frames, bins) magnitude matrix."""
    mags = np.atleast_2d(np.asarray(magnitudes, dtype=np.float64))
    pcs = _pitch_classes(mags.shape[1], float(bin_hz))
    keep = pcs >= 0
    out = np.zeros((mags.shape[0], N_CHROMA))
    for pc in range(N_CHROMA):
        out[:, pc] = mags[:, keep & (pcs == pc)].sum(axis=1)
    totals = out.sum(axis=1, keepdims=True)
    silent = totals[:, 0] <= 0
    out[~silent] /= totals[~silent]
    out[silent] = 1.0 / N_CHROMA
    return out


def chroma_vector(frame_magnitudes, bin_hz: float) -> np.ndarray:
    return chroma_frames(np.asarray(frame_magnitudes)[None, :], bin_hz)[0]


def chroma_deviation(chroma) -> float:
    c = np.asarray(chroma, dtype=np.float64)
    if c.size == 0:
        raise InsufficientDataError("chroma deviation of an empty series")
    c = np.atleast_2d(c)
    return float(np.mean(np.std(c, axis=1)))


@dataclass(frozen=True)
class FeatureConfig:
    frame: FrameSpec = field(default_factory=FrameSpec)
    n_mels: int = 40
    n_mfcc: int = 13
    fmin: float = 0.0
    fmax: float | None = None


@dataclass
class AudioFeatureVector:
    zcr_mean: float
    rms_mean: float
    chroma: np.ndarray
    chroma_deviation: float
    mfcc_means: np.ndarray
    series: dict[str, np.ndarray] | None = None

    @property
    def n_mfcc(self) -> int:
        return len(self.mfcc_means)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            ([self.zcr_mean, self.rms_mean], self.chroma, [self.chroma_deviation], self.mfcc_means)
        )

    def to_dict(self) -> dict:
        return {
            "zcr_mean": self.zcr_mean,
            "rms_mean": self.rms_mean,
            "chroma": [float(v) for v in self.chroma],
            "chroma_deviation": self.chroma_deviation,
            "mfcc_means": [float(v) for v in self.mfcc_means],
        }


def feature_names(n_mfcc: int) -> list[str]:
    return (["zcr", "rms"] + [f"chroma_{i}" for i in range(N_CHROMA)]
            + ["chroma_dev"] + [f"mfcc_{i}" for i in range(n_mfcc)])


def extract_features(buf: AudioBuffer, config: FeatureConfig | None = None,
                     keep_series: bool = False) -> AudioFeatureVector:
    """Reduce every per-frame feature series to its arithmetic mean.

    ZCR and RMS are measured on unwindowed frames; the spectral features use
    the configured window.
    """
    config = config or FeatureConfig()
    spec = config.frame
    frames = raw_frames(buf, spec)
    positive = frames >= 0
    zcr = np.count_nonzero(positive[:, 1:] != positive[:, :-1], axis=1) / (spec.frame_len - 1)
    rms_series = np.sqrt(np.mean(frames * frames, axis=1))

    spectrogram: Spectrogram = stft(buf, spec)
    chroma = chroma_frames(spectrogram.magnitudes, spectrogram.bin_hz)
    bank = mel_filterbank(config.n_mels, spec.frame_len, buf.sample_rate, config.fmin, config.fmax)
    mel = (spectrogram.magnitudes ** 2) @ bank.triangles.T
    if not 1 <= config.n_mfcc <= config.n_mels:
        raise ParameterError(f"need 1 <= n_mfcc <= n_mels, got {config.n_mfcc} > {config.n_mels}")
    cepstra = np.log(mel + LOG_FLOOR) @ dct_matrix(config.n_mels)[: config.n_mfcc].T

    series = None
    if keep_series:
        series = {"zcr": zcr, "rms": rms_series, "chroma": chroma, "mel": mel, "mfcc": cepstra}
    return AudioFeatureVector(
        zcr_mean=float(zcr.mean()),
        rms_mean=float(rms_series.mean()),
        chroma=chroma.mean(axis=0),
        chroma_deviation=float(np.mean(np.std(chroma, axis=1))),
        mfcc_means=cepstra.mean(axis=0),
        series=series,
    )


def features_csv(rows: list[tuple[str, AudioFeatureVector]]) -> str:
    if not rows:
        raise InsufficientDataError("no feature rows to write")
    n_mfcc = rows[0][1].n_mfcc
    lines = [",".join(["clip_id"] + feature_names(n_mfcc))]
    for clip_id, fv in rows:
        lines.append(",".join([clip_id] + [repr(float(v)) for v in fv.to_vector()]))
    return "\n".join(lines) + "\n"


def features_json(clip_id: str, fv: AudioFeatureVector) -> str:
    return json.dumps({"clip_id": clip_id, **fv.to_dict()}, indent=2) + "\n"
