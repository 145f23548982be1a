"""Mono PCM audio clips: WAV reading/writing and 16 kHz resampling.

Only 16-bit integer PCM WAV is accepted; compressed and float variants
are rejected by format name.  Stereo input keeps channel 0.  Writing
emits a canonical 44-byte header, so write(read(x)) is byte-identical
for canonical 16 kHz/16-bit mono input.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

TARGET_RATE = 16000

_FORMAT_NAMES = {
    0x0001: "PCM",
    0x0002: "ADPCM",
    0x0003: "IEEE float",
    0x0006: "A-law",
    0x0007: "mu-law",
    0x0011: "IMA ADPCM",
    0x0055: "MP3",
    0xFFFE: "WAVE_FORMAT_EXTENSIBLE",
}


@dataclass(frozen=True)
class AudioClip:
    """Mono audio: sample rate plus samples in [-1, 1]."""

    sample_rate: int
    samples: np.ndarray

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("samples must be a 1-D array")
        object.__setattr__(self, "samples", arr)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(data: bytes) -> AudioClip:
    """Decode 16-bit PCM WAV bytes (mono kept as-is, stereo keeps channel 0)."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ValueError("truncated or non-RIFF WAV header")

    fmt = None
    pcm = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise ValueError("truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < size:
                raise ValueError("truncated data chunk")
            pcm = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or pcm is None:
        raise ValueError("missing fmt or data chunk")
    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 0x0001:
        name = _FORMAT_NAMES.get(audio_format, f"0x{audio_format:04X}")
        raise ValueError(f"unsupported WAV format: {name} (only 16-bit PCM accepted)")
    if bits != 16:
        raise ValueError(f"unsupported bit depth: {bits} (only 16-bit PCM accepted)")
    if channels not in (1, 2):
        raise ValueError(f"unsupported channel count: {channels}")

    raw = np.frombuffer(pcm[: len(pcm) - (len(pcm) % (2 * channels))], dtype="<i2")
    if channels == 2:
        raw = raw[0::2]
    return AudioClip(sample_rate=rate, samples=raw.astype(np.float64) / 32768.0)


def write_wav(clip: AudioClip) -> bytes:
    """Encode a clip as canonical 16-bit PCM mono WAV bytes."""
    scaled = np.clip(np.round(np.clip(clip.samples, -1.0, 1.0) * 32768.0), -32768, 32767)
    pcm = scaled.astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(pcm),
        b"WAVE",
        b"fmt ",
        16,
        0x0001,
        1,
        clip.sample_rate,
        clip.sample_rate * 2,
        2,
        16,
        b"data",
        len(pcm),
    )
    return header + pcm


def resample(clip: AudioClip, rate: int = TARGET_RATE) -> AudioClip:
    """Polyphase windowed-sinc resampling (Kaiser window, beta=5.0).

    The anti-aliasing cutoff sits at the Nyquist frequency of the lower
    of the two rates.  Same-rate input is returned unchanged.
    """
    if clip.sample_rate == rate:
        return clip
    ratio = Fraction(rate, clip.sample_rate)
    out = resample_poly(clip.samples, ratio.numerator, ratio.denominator)
    return AudioClip(sample_rate=rate, samples=out)


def load_wav(path: str | Path) -> AudioClip:
    return read_wav(Path(path).read_bytes())


def save_wav(path: str | Path, clip: AudioClip) -> None:
    Path(path).write_bytes(write_wav(clip))
