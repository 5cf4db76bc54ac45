"""High-level CTC recognizer with a fit/predict estimator interface."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .audio import AudioClip
from .augment import policy_by_name
from .frontend import FrontendConfig, extract_features
from .metrics import wer
from .net.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .net.network import ModelConfig, init_params
from .net.training import (TrainConfig, TrainItem, predict_features,
                           train_on_features)
from .rng import derive_rng
from .text import Charset, build_charset


class CTCRecognizer(BaseEstimator):
    """End-to-end recognizer: clips in, text out.

    fit(X, y) takes AudioClips (or raw sample arrays) and transcript
    strings; predict(X) greedy-decodes. The charset is derived from the
    training transcripts unless one is passed in. score(X, y) returns the
    negative word error rate so that larger is better.
    """

    def __init__(self, preset="tiny", dropout=0.2, batch_size=32, epochs=50,
                 learning_rate=0.02, specaugment="small", dither=1e-5, seed=0,
                 charset=None):
        self.preset = preset
        self.dropout = dropout
        self.batch_size = batch_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.specaugment = specaugment
        self.dither = dither
        self.seed = seed
        self.charset = charset

    # -- internals ----------------------------------------------------

    def _model_config(self) -> ModelConfig:
        return ModelConfig.preset(self.preset, dropout=self.dropout)

    def _train_config(self) -> TrainConfig:
        return TrainConfig(batch_size=self.batch_size, epochs=self.epochs,
                           learning_rate=self.learning_rate, seed=self.seed)

    def _frontend_config(self) -> FrontendConfig:
        return FrontendConfig(dither=self.dither)

    def _as_clip(self, x) -> AudioClip:
        return x if isinstance(x, AudioClip) else AudioClip(np.asarray(x, float))

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("this CTCRecognizer is not fitted yet")

    # -- estimator API ------------------------------------------------

    def fit(self, X, y):
        if len(X) != len(y):
            raise ValueError("X and y must have the same length")
        charset = self.charset or build_charset(y)[0]
        cfg = self._model_config()
        fe_cfg = self._frontend_config()
        items = []
        for i, (clip, text) in enumerate(zip(X, y)):
            rng = derive_rng(self.seed, "dither", i) if fe_cfg.dither > 0 else None
            feats = extract_features(self._as_clip(clip), fe_cfg, rng)
            items.append(TrainItem(feats, charset.encode(text, "item %d" % i),
                                   "item%d" % i))
        params = init_params(cfg, len(charset), seed=self.seed)
        policy = policy_by_name(self.specaugment)
        history = train_on_features(cfg, params, items, self._train_config(), policy)
        self.model_config_ = cfg
        self.charset_ = charset
        self.params_ = params
        self.loss_history_ = history
        return self

    def predict(self, X) -> list[str]:
        self._check_fitted()
        fe_cfg = self._frontend_config()
        feats = [extract_features(self._as_clip(c), fe_cfg) for c in X]
        return predict_features(self.params_, self.model_config_, feats,
                                self.charset_, self.batch_size)

    def score(self, X, y) -> float:
        """Negative WER percent (0.0 is perfect)."""
        return -wer(list(y), self.predict(X))

    # -- persistence --------------------------------------------------

    def to_checkpoint(self) -> Checkpoint:
        self._check_fitted()
        return Checkpoint(model_config=self.model_config_, charset=self.charset_,
                          params=self.params_,
                          rng_info={"seed": self.seed, "epochs": self.epochs})

    def save(self, path) -> None:
        save_checkpoint(path, self.to_checkpoint())

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "CTCRecognizer":
        est = cls(charset=ckpt.charset)
        est.model_config_ = ckpt.model_config
        est.charset_ = ckpt.charset
        est.params_ = ckpt.params
        est.loss_history_ = []
        return est

    @classmethod
    def load(cls, path) -> "CTCRecognizer":
        return cls.from_checkpoint(load_checkpoint(path))
