"""Audio decoding, Fourier analysis and speech feature extraction."""

from .buffer import (
    AudioBuffer,
    FrameSpec,
    amplitude_series,
    frame_count,
    frame_signal,
    raw_frames,
    window_weights,
)
from .features import (
    AudioFeatureVector,
    FeatureConfig,
    MelFilterbank,
    chroma_deviation,
    chroma_frames,
    chroma_vector,
    dct_matrix,
    extract_features,
    feature_names,
    features_csv,
    features_json,
    hz_to_mel,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    mfcc,
    rms,
    zero_crossing_rate,
)
from .fourier import Spectrogram, fft, ifft, is_power_of_two, stft
from .wav import encode_wav_pcm16, load_wav, read_wav, write_wav

__all__ = [
    "AudioBuffer", "FrameSpec", "amplitude_series", "frame_count", "frame_signal",
    "raw_frames", "window_weights", "AudioFeatureVector", "FeatureConfig", "MelFilterbank",
    "chroma_deviation", "chroma_frames", "chroma_vector", "dct_matrix", "extract_features",
    "feature_names", "features_csv", "features_json", "hz_to_mel", "mel_filterbank",
    "mel_spectrogram", "mel_to_hz", "mfcc", "rms", "zero_crossing_rate", "Spectrogram",
    "fft", "ifft", "is_power_of_two", "stft", "encode_wav_pcm16", "load_wav", "read_wav",
    "write_wav",
]
