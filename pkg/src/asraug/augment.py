"""SpecAugment: random rectangular masks on feature matrices.

Two presets: SMALL (5 rects, up to 2x2) for corpora under 100 hours,
LARGE (5 rects, up to 120 frames x 50 channels) for 100 hours or more.
Masked cells are set to 0.0, the channel mean after per-feature
normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .rng import derive_rng


@dataclass(frozen=True)
class SpecAugmentPolicy:
    n_rects: int = 5
    max_time_width: int = 2
    max_freq_width: int = 2

    def __post_init__(self):
        if self.n_rects < 0 or self.max_time_width < 0 or self.max_freq_width < 0:
            raise ValueError("policy counts and widths must be >= 0")


SMALL = SpecAugmentPolicy(5, 2, 2)
LARGE = SpecAugmentPolicy(5, 120, 50)
OFF = SpecAugmentPolicy(0, 0, 0)

POLICY_HOURS_THRESHOLD = 100.0


def apply_specaugment(feat: np.ndarray, policy: SpecAugmentPolicy,
                      rng: np.random.Generator) -> np.ndarray:
    """Zero out `n_rects` random rectangles; widths uniform in [0, max].

    Rectangles wider than the matrix are clipped at the edges; overlap is
    allowed. Unmasked cells are returned bit-identical.
    """
    out = np.array(feat, copy=True)
    n_t, n_f = out.shape
    for _ in range(policy.n_rects):
        w_t = int(rng.integers(0, policy.max_time_width + 1))
        w_f = int(rng.integers(0, policy.max_freq_width + 1))
        w_t = min(w_t, n_t)
        w_f = min(w_f, n_f)
        t0 = int(rng.integers(0, n_t - w_t + 1))
        f0 = int(rng.integers(0, n_f - w_f + 1))
        out[t0:t0 + w_t, f0:f0 + w_f] = 0.0
    return out


def choose_policy(stage: str, dataset_hours: float) -> SpecAugmentPolicy:
    """LARGE from 100 hours of data upward, SMALL below."""
    if stage not in ("pretrain", "finetune"):
        raise ValueError("stage must be 'pretrain' or 'finetune', got %r" % stage)
    if dataset_hours < 0:
        raise ValueError("dataset_hours must be >= 0")
    return LARGE if dataset_hours >= POLICY_HOURS_THRESHOLD else SMALL


def policy_by_name(name: str) -> SpecAugmentPolicy:
    table = {"small": SMALL, "large": LARGE, "off": OFF}
    if name not in table:
        raise ValueError("unknown SpecAugment policy %r (small|large|off)" % name)
    return table[name]


class SpecAugment(BaseEstimator, TransformerMixin):
    """Transformer applying a named mask policy to a list of feature matrices.

    Each matrix gets its own generator derived from (seed, index), so the
    augmentation is reproducible and order-independent.
    """

    def __init__(self, policy="small", seed=0):
        self.policy = policy
        self.seed = seed

    def fit(self, X, y=None):
        policy_by_name(self.policy)
        return self

    def transform(self, X):
        policy = policy_by_name(self.policy)
        if policy.n_rects == 0:
            return [np.array(feat, copy=True) for feat in X]
        return [apply_specaugment(feat, policy, derive_rng(self.seed, "specaugment", i))
                for i, feat in enumerate(X)]
