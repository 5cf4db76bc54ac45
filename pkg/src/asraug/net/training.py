"""Training loop: shuffled batches, SpecAugment, CTC, Novograd.

Everything stochastic draws from streams derived from (seed, purpose,
epoch, index), so a (seed, data, config) triple fully determines the
resulting parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..audio import read_wav
from ..augment import SpecAugmentPolicy, apply_specaugment
from ..errors import EmptyManifest, NonFiniteLoss
from ..frontend import FrontendConfig, extract_features, pad_to_multiple
from ..rng import derive_rng
from ..text import Charset
from .ctc import ctc_loss, greedy_decode_ids
from .network import (ModelConfig, backward, forward, init_params,
                      update_running_stats)
from .novograd import OptimizerState, novograd_step


@dataclass
class TrainConfig:
    batch_size: int = 32
    epochs: int = 50
    learning_rate: float = 0.02
    optimizer: str = "novograd"
    loss: str = "ctc"
    seed: int = 0
    # small-corpus momentum settings; the 0.95/0.5 defaults published for
    # the large-scale architecture stall in the CTC blank plateau at a few
    # hundred optimizer steps
    beta1: float = 0.8
    beta2: float = 0.25
    weight_decay: float = 1e-3
    eps: float = 1e-8

    def validate(self) -> "TrainConfig":
        if self.optimizer != "novograd":
            raise ValueError("only the novograd optimizer is available")
        if self.loss != "ctc":
            raise ValueError("only the ctc loss is available")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        return self


@dataclass
class TrainItem:
    features: np.ndarray      # (T, n_mels), normalized
    target: list[int]
    utt_id: str


def stack_batch(feats: list[np.ndarray], pad_multiple: int = 16):
    """Pad to the batch max (rounded up to `pad_multiple`) and stack as
    (B, n_mels, T). Returns the stack and the valid frame counts."""
    lengths = [f.shape[0] for f in feats]
    t_max = -(-max(lengths) // pad_multiple) * pad_multiple
    n_mels = feats[0].shape[1]
    x = np.zeros((len(feats), n_mels, t_max))
    for i, f in enumerate(feats):
        x[i, :, :f.shape[0]] = f.T
    return x, lengths


def train_on_features(model_cfg: ModelConfig, params: dict,
                      dataset: list[TrainItem], cfg: TrainConfig,
                      policy: SpecAugmentPolicy,
                      opt_state: OptimizerState | None = None):
    """Run cfg.epochs of training in place; returns per-epoch mean loss."""
    cfg.validate()
    if not dataset:
        raise EmptyManifest("no utterances to train on")
    opt_state = opt_state or OptimizerState()
    n = len(dataset)
    stride = model_cfg.prologue_stride
    augment = policy.n_rects > 0 and (policy.max_time_width > 0
                                      or policy.max_freq_width > 0)
    history = []
    for epoch in range(cfg.epochs):
        order = derive_rng(cfg.seed, "shuffle", epoch).permutation(n)
        epoch_losses = []
        for b0 in range(0, n, cfg.batch_size):
            idxs = order[b0:b0 + cfg.batch_size]
            feats = []
            for i in idxs:
                f = dataset[int(i)].features
                if augment:
                    f = apply_specaugment(
                        f, policy, derive_rng(cfg.seed, "augment", epoch, int(i)))
                feats.append(f)
            x, lengths = stack_batch(feats)
            logits, cache = forward(params, model_cfg, x, "train",
                                    derive_rng(cfg.seed, "dropout", epoch, b0))
            grad = np.zeros_like(logits)
            for j, i in enumerate(idxs):
                t_out = -(-lengths[j] // stride)
                loss_j, g_j = ctc_loss(logits[j, :t_out], dataset[int(i)].target)
                if not np.isfinite(loss_j):
                    raise NonFiniteLoss("loss diverged on %r (epoch %d)"
                                        % (dataset[int(i)].utt_id, epoch))
                grad[j, :t_out] = g_j / len(idxs)
                epoch_losses.append(loss_j)
            grads = backward(cache, grad)
            novograd_step(params, grads, opt_state, lr=cfg.learning_rate,
                          beta1=cfg.beta1, beta2=cfg.beta2,
                          weight_decay=cfg.weight_decay, eps=cfg.eps)
            update_running_stats(params, cache, model_cfg.bn_momentum)
        history.append(float(np.mean(epoch_losses)))
    return history


def _load_dataset(manifest, charset: Charset, frontend_cfg: FrontendConfig,
                  seed: int, dither: bool) -> list[TrainItem]:
    if len(manifest) == 0:
        raise EmptyManifest("manifest %r has no utterances"
                            % (manifest.source_path or "<memory>"))
    items = []
    for i, utt in enumerate(manifest):
        clip = read_wav(utt.resolve_path(manifest.base_dir))
        rng = derive_rng(seed, "dither", i) if dither else None
        feats = extract_features(clip, frontend_cfg, rng)
        target = charset.encode(utt.text, context=utt.audio_filepath)
        items.append(TrainItem(feats, target, utt.audio_filepath))
    return items


def train_on_manifest(manifest, model_cfg: ModelConfig, cfg: TrainConfig,
                      policy: SpecAugmentPolicy, charset: Charset,
                      params: dict | None = None,
                      frontend_cfg: FrontendConfig | None = None):
    """Train (or continue training) on a manifest; returns (params, history).

    `params=None` initializes fresh weights from cfg.seed; passing the
    parameters of a pretrained model fine-tunes them.
    """
    frontend_cfg = frontend_cfg or FrontendConfig()
    dataset = _load_dataset(manifest, charset, frontend_cfg, cfg.seed,
                            dither=frontend_cfg.dither > 0)
    if params is None:
        params = init_params(model_cfg, len(charset), seed=cfg.seed)
    history = train_on_features(model_cfg, params, dataset, cfg, policy)
    return params, history


def compute_logits(params: dict, model_cfg: ModelConfig,
                   feats_list: list[np.ndarray],
                   batch_size: int = 32) -> list[np.ndarray]:
    """Eval-mode logits per feature matrix, trimmed to valid frames."""
    stride = model_cfg.prologue_stride
    out = []
    for b0 in range(0, len(feats_list), batch_size):
        batch = feats_list[b0:b0 + batch_size]
        x, lengths = stack_batch(batch)
        logits, _ = forward(params, model_cfg, x, "eval")
        for j, t in enumerate(lengths):
            out.append(logits[j, :-(-t // stride)].copy())
    return out


def predict_features(params: dict, model_cfg: ModelConfig,
                     feats_list: list[np.ndarray], charset: Charset,
                     batch_size: int = 32) -> list[str]:
    """Greedy-decode a list of feature matrices in eval mode."""
    return [charset.decode(greedy_decode_ids(lg))
            for lg in compute_logits(params, model_cfg, feats_list, batch_size)]


def predict_manifest(params: dict, model_cfg: ModelConfig, manifest,
                     charset: Charset, batch_size: int = 32,
                     frontend_cfg: FrontendConfig | None = None) -> list[str]:
    frontend_cfg = frontend_cfg or FrontendConfig()
    feats = [extract_features(read_wav(u.resolve_path(manifest.base_dir)),
                              frontend_cfg)
             for u in manifest]
    return predict_features(params, model_cfg, feats, charset, batch_size)
