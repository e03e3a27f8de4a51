"""RIFF/WAVE decoding for PCM 8/16-bit and IEEE float 32-bit, plus a 16-bit writer."""

from __future__ import annotations

import io
import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DecodeError, UnsupportedFormatError
from .buffer import AudioBuffer

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class WavFormat:
    format_tag: int
    channels: int
    sample_rate: int
    block_align: int
    bits_per_sample: int


def _parse_fmt(body: bytes, offset: int) -> WavFormat:
    if len(body) < 16:
        raise DecodeError(f"'fmt ' chunk too short ({len(body)} bytes)", offset)
    tag, channels, rate, _byte_rate, align, bits = struct.unpack_from("<HHIIHH", body, 0)
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise DecodeError("extensible 'fmt ' chunk too short", offset)
        # First two bytes of the sub-format GUID carry the real format tag.
        (tag,) = struct.unpack_from("<H", body, 24)
    return WavFormat(tag, channels, rate, align, bits)


def _decode_samples(fmt: WavFormat, data: bytes) -> np.ndarray:
    if fmt.channels not in (1, 2):
        raise UnsupportedFormatError(f"{fmt.channels} channels; only mono and stereo are supported")
    kind = (fmt.format_tag, fmt.bits_per_sample)
    if kind == (WAVE_FORMAT_PCM, 8):
        raw = np.frombuffer(data, dtype=np.uint8).astype(np.float64)
        x = (raw - 128.0) / 128.0
    elif kind == (WAVE_FORMAT_PCM, 16):
        usable = len(data) - len(data) % 2
        x = np.frombuffer(data[:usable], dtype="<i2").astype(np.float64) / 32768.0
    elif kind == (WAVE_FORMAT_IEEE_FLOAT, 32):
        usable = len(data) - len(data) % 4
        x = np.frombuffer(data[:usable], dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(x)):
            raise DecodeError("float samples contain NaN or infinity")
        x = np.clip(x, -1.0, 1.0)
    else:
        raise UnsupportedFormatError(
            f"format tag 0x{fmt.format_tag:04x} with {fmt.bits_per_sample} bits per sample"
        )
    n_frames = x.size // fmt.channels
    x = x[: n_frames * fmt.channels]
    if fmt.channels == 2:
        x = x.reshape(n_frames, 2).mean(axis=1)
    return x


def load_wav(data: bytes) -> AudioBuffer:
    """Decode a WAV byte string into a mono ``AudioBuffer``."""
    if len(data) < 12:
        raise DecodeError("file shorter than a RIFF header", 0)
    riff, _size, wave_id = struct.unpack_from("<4sI4s", data, 0)
    if riff != b"RIFF":
        raise DecodeError(f"expected 'RIFF' magic, found {riff!r}", 0)
    if wave_id != b"WAVE":
        raise DecodeError(f"expected 'WAVE' form type, found {wave_id!r}", 8)

    fmt = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id, size = struct.unpack_from("<4sI", data, pos)
        body_start = pos + 8
        body_end = body_start + size
        name = chunk_id.decode("latin-1")
        if chunk_id == b"fmt ":
            if body_end > len(data):
                raise DecodeError(f"truncated '{name}' chunk", pos)
            fmt = _parse_fmt(data[body_start:body_end], pos)
        elif chunk_id == b"data":
            if fmt is None:
                raise DecodeError("'data' chunk before 'fmt ' chunk", pos)
            if body_end > len(data):
                raise DecodeError(
                    f"truncated 'data' chunk: declares {size} bytes, {len(data) - body_start} present",
                    pos,
                )
            if fmt.sample_rate <= 0:
                raise DecodeError(f"invalid sample rate {fmt.sample_rate}", pos)
            samples = _decode_samples(fmt, data[body_start:body_end])
            return AudioBuffer(samples, fmt.sample_rate)
        pos = body_end + (size & 1)
    if fmt is None:
        raise DecodeError("no 'fmt ' chunk found", pos)
    raise DecodeError("no 'data' chunk found", pos)


def read_wav(path: str | Path) -> AudioBuffer:
    return load_wav(Path(path).read_bytes())


def encode_wav_pcm16(buf: AudioBuffer) -> bytes:
    pcm = np.clip(np.round(buf.samples * 32767.0), -32768, 32767).astype("<i2")
    out = io.BytesIO()
    with wave.open(out, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate)
        w.writeframes(pcm.tobytes())
    return out.getvalue()


def write_wav(path: str | Path, buf: AudioBuffer) -> None:
    Path(path).write_bytes(encode_wav_pcm16(buf))
