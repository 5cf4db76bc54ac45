"""Log-mel filterbank frontend.

20 ms Hanning windows every 10 ms, 512-point FFT, 64 un-normalized
triangular mel filters on the HTK scale up to Nyquist, log with a small
floor, per-feature utterance normalization, frame padding to a multiple
of 16. No centering: frame i covers samples [i*stride, i*stride+window).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .audio import SAMPLE_RATE, AudioClip, add_dither
from .errors import DegenerateInput, TooShort
from .rng import derive_rng

N_MELS = 64


@dataclass
class FrontendConfig:
    window_ms: float = 20.0
    stride_ms: float = 10.0
    n_fft: int = 512
    n_mels: int = N_MELS
    dither: float = 1e-5
    pad_multiple: int = 16
    norm_epsilon: float = 1e-5
    log_floor: float = 2.0 ** -24
    fmin: float = 0.0
    fmax: float = SAMPLE_RATE / 2.0

    @property
    def window_samples(self) -> int:
        return int(round(self.window_ms * SAMPLE_RATE / 1000.0))

    @property
    def stride_samples(self) -> int:
        return int(round(self.stride_ms * SAMPLE_RATE / 1000.0))

    def validate(self) -> "FrontendConfig":
        if self.n_fft < self.window_samples:
            raise ValueError("n_fft (%d) smaller than the window (%d samples)"
                             % (self.n_fft, self.window_samples))
        return self


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, fmin: float, fmax: float) -> np.ndarray:
    """Un-normalized triangular filters, shape (n_mels, n_fft//2 + 1)."""
    n_bins = n_fft // 2 + 1
    bin_freqs = np.arange(n_bins) * (SAMPLE_RATE / n_fft)
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        up = (bin_freqs - lo) / max(center - lo, 1e-12)
        down = (hi - bin_freqs) / max(hi - center, 1e-12)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def frame_count(n_samples: int, cfg: FrontendConfig) -> int:
    win, hop = cfg.window_samples, cfg.stride_samples
    if n_samples < win:
        raise TooShort("clip of %d samples shorter than one %d-sample window"
                       % (n_samples, win))
    return 1 + (n_samples - win) // hop


def stft(clip: AudioClip, cfg: FrontendConfig | None = None) -> np.ndarray:
    """Complex spectrogram, shape (T, n_fft//2 + 1)."""
    cfg = (cfg or FrontendConfig()).validate()
    win, hop = cfg.window_samples, cfg.stride_samples
    n_frames = frame_count(len(clip), cfg)
    window = np.hanning(win)
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = clip.samples[idx] * window[None, :]
    return np.fft.rfft(frames, n=cfg.n_fft, axis=1)


def log_mel(spec: np.ndarray, cfg: FrontendConfig | None = None) -> np.ndarray:
    """Log mel-filterbank energies from a complex spectrogram, (T, n_mels)."""
    cfg = cfg or FrontendConfig()
    n_bins = cfg.n_fft // 2 + 1
    if spec.shape[1] != n_bins:
        raise ValueError("expected %d frequency bins, got %d" % (n_bins, spec.shape[1]))
    power = np.abs(spec) ** 2
    fb = mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.fmin, cfg.fmax)
    return np.log(power @ fb.T + cfg.log_floor)


def normalize_per_feature(feat: np.ndarray, epsilon: float = 1e-5) -> np.ndarray:
    """Zero-mean, unit-std each mel channel over the utterance."""
    feat = np.asarray(feat, dtype=np.float64)
    if feat.shape[0] < 2:
        raise DegenerateInput("per-feature normalization needs >= 2 frames, got %d"
                              % feat.shape[0])
    mean = feat.mean(axis=0, keepdims=True)
    std = feat.std(axis=0, keepdims=True)
    return (feat - mean) / (std + epsilon)


def pad_to_multiple(feat: np.ndarray, multiple: int = 16) -> np.ndarray:
    """Append zero frames until the frame count is a multiple of `multiple`."""
    if multiple < 1:
        raise ValueError("pad multiple must be >= 1")
    t = feat.shape[0]
    target = -(-t // multiple) * multiple
    if target == t:
        return feat
    return np.vstack([feat, np.zeros((target - t, feat.shape[1]), dtype=feat.dtype)])


def extract_features(clip: AudioClip, cfg: FrontendConfig | None = None,
                     dither_rng: np.random.Generator | None = None) -> np.ndarray:
    """Full pipeline: optional dither -> STFT -> log-mel -> normalize.

    Padding to a frame multiple is left to the batching layer so valid
    lengths stay visible. Dither is applied only when a generator is
    supplied (training); evaluation features are deterministic.
    """
    cfg = (cfg or FrontendConfig()).validate()
    if dither_rng is not None and cfg.dither > 0:
        clip = add_dither(clip, cfg.dither, dither_rng)
    return normalize_per_feature(log_mel(stft(clip, cfg), cfg), cfg.norm_epsilon)


class LogMelFrontend(BaseEstimator, TransformerMixin):
    """Stateless transformer from AudioClips to normalized log-mel matrices.

    `transform` maps a list of clips to a list of (T_i, n_mels) arrays.
    With dither > 0 and a seed set, each clip gets its own derived noise
    stream, so results are independent of processing order.
    """

    def __init__(self, window_ms=20.0, stride_ms=10.0, n_fft=512, n_mels=N_MELS,
                 dither=0.0, seed=0):
        self.window_ms = window_ms
        self.stride_ms = stride_ms
        self.n_fft = n_fft
        self.n_mels = n_mels
        self.dither = dither
        self.seed = seed

    def _config(self) -> FrontendConfig:
        return FrontendConfig(window_ms=self.window_ms, stride_ms=self.stride_ms,
                              n_fft=self.n_fft, n_mels=self.n_mels,
                              dither=self.dither).validate()

    def fit(self, X, y=None):
        self._config()
        return self

    def transform(self, X):
        cfg = self._config()
        out = []
        for i, clip in enumerate(X):
            if not isinstance(clip, AudioClip):
                clip = AudioClip(np.asarray(clip, dtype=np.float64))
            rng = derive_rng(self.seed, "dither", i) if cfg.dither > 0 else None
            out.append(extract_features(clip, cfg, rng))
        return out
