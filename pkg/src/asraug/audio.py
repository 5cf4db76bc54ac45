"""Audio decoding and low-level sample utilities.

Input contract is strict: RIFF/WAVE, PCM 16-bit little-endian, mono,
16 kHz. Anything else raises instead of silently resampling.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptFile, UnsupportedFormat

SAMPLE_RATE = 16000
PCM_SCALE = 32768.0


@dataclass
class AudioClip:
    """Mono audio at 16 kHz, samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise UnsupportedFormat("expected a mono sample vector, got shape %s"
                                    % (self.samples.shape,))
        if self.sample_rate != SAMPLE_RATE:
            raise UnsupportedFormat("sample rate must be %d Hz, got %d"
                                    % (SAMPLE_RATE, self.sample_rate))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def decode_wav(data: bytes) -> AudioClip:
    """Parse a RIFF/WAVE byte string into an AudioClip.

    Accepts only PCM 16-bit mono at 16 kHz; scales samples by 1/32768.
    """
    if len(data) < 12:
        raise CorruptFile("file shorter than a RIFF header (%d bytes)" % len(data))
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormat("not a RIFF/WAVE container")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise CorruptFile("chunk %r truncated: header says %d bytes, %d present"
                              % (cid.decode("ascii", "replace"), size, len(body)))
        if cid == b"fmt ":
            if size < 16:
                raise CorruptFile("fmt chunk too short (%d bytes)" % size)
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            payload = body
        # chunks are word-aligned
        pos += 8 + size + (size & 1)

    if fmt is None:
        raise CorruptFile("missing fmt chunk")
    if payload is None:
        raise CorruptFile("missing data chunk")

    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormat("audio format must be PCM (1), got %d" % audio_format)
    if channels != 1:
        raise UnsupportedFormat("channel count must be 1, got %d" % channels)
    if rate != SAMPLE_RATE:
        raise UnsupportedFormat("sample rate must be %d Hz, got %d" % (SAMPLE_RATE, rate))
    if bits != 16:
        raise UnsupportedFormat("bit depth must be 16, got %d" % bits)
    if len(payload) % 2 != 0:
        raise CorruptFile("data chunk has an odd byte count (%d)" % len(payload))

    pcm = np.frombuffer(payload, dtype="<i2")
    return AudioClip(pcm.astype(np.float64) / PCM_SCALE)


def encode_wav(clip: AudioClip) -> bytes:
    """Serialize a clip as PCM 16-bit mono 16 kHz WAV bytes."""
    pcm = np.clip(np.rint(clip.samples * PCM_SCALE), -32768, 32767).astype("<i2")
    payload = pcm.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, SAMPLE_RATE, SAMPLE_RATE * 2, 2, 16,
        b"data", len(payload),
    )
    return header + payload


def read_wav(path) -> AudioClip:
    with open(path, "rb") as fh:
        return decode_wav(fh.read())


def write_wav(path, clip: AudioClip) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_wav(clip))


def add_dither(clip: AudioClip, magnitude: float = 1e-5,
               rng: np.random.Generator | None = None) -> AudioClip:
    """Perturb each sample by uniform noise in [-magnitude, +magnitude]."""
    if magnitude < 0:
        raise ValueError("dither magnitude must be >= 0")
    if magnitude == 0:
        return AudioClip(clip.samples.copy())
    if rng is None:
        rng = np.random.default_rng(0)
    noise = rng.uniform(-magnitude, magnitude, size=len(clip.samples))
    return AudioClip(clip.samples + noise)


FEATURE_MAGIC = b"FEAT"


def write_features(path, feat: np.ndarray) -> None:
    """Dump a T x F feature matrix: magic 'FEAT', u32 T, u32 F, f32 LE rows."""
    feat = np.asarray(feat)
    if feat.ndim != 2:
        raise ValueError("feature matrix must be 2-D, got shape %s" % (feat.shape,))
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", feat.shape[0], feat.shape[1]))
        fh.write(np.ascontiguousarray(feat, dtype="<f4").tobytes())


def read_features(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != FEATURE_MAGIC:
        raise CorruptFile("bad feature-dump magic %r" % data[:4])
    t, f = struct.unpack("<II", data[4:12])
    if len(data) - 12 != 4 * t * f:
        raise CorruptFile("feature dump truncated: header says %dx%d, %d bytes present"
                          % (t, f, len(data) - 12))
    body = np.frombuffer(data[12:], dtype="<f4")
    if body.size != t * f:
        raise CorruptFile("feature dump truncated: header says %dx%d, %d floats present"
                          % (t, f, body.size))
    return body.reshape(t, f).astype(np.float64)
