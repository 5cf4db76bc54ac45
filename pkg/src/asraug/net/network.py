"""Compact separable-convolution CTC acoustic model.

Shape: a strided separable prologue, `n_blocks` blocks of `repetitions`
sub-blocks (depthwise conv, pointwise mix, batchnorm, ReLU, dropout),
then a dilated separable conv, a 1x1 conv, and a 1x1 projection onto
the charset plus blank (index 0). Forward and backward are hand-derived
and pure; running batchnorm statistics are updated explicitly by the
training loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigInvalid, ShapeMismatch, StaleCache
from . import layers

N_INPUT_CHANNELS = 64


@dataclass(frozen=True)
class ModelConfig:
    n_blocks: int = 4
    repetitions: int = 2
    block_channels: tuple = (256, 256, 512, 512)
    block_kernels: tuple = (11, 13, 17, 21)
    prologue_channels: int = 256
    prologue_kernel: int = 11
    prologue_stride: int = 2
    epilogue_channels: tuple = (1024, 1024)
    epilogue_kernel: int = 29
    epilogue_dilation: int = 2
    dropout: float = 0.2
    n_mels: int = N_INPUT_CHANNELS
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    def validate(self) -> "ModelConfig":
        if len(self.block_channels) != self.n_blocks:
            raise ConfigInvalid("block_channels has %d entries for %d blocks"
                                % (len(self.block_channels), self.n_blocks))
        if len(self.block_kernels) != self.n_blocks:
            raise ConfigInvalid("block_kernels has %d entries for %d blocks"
                                % (len(self.block_kernels), self.n_blocks))
        kernels = (self.prologue_kernel, self.epilogue_kernel, *self.block_kernels)
        if any(k % 2 == 0 or k < 1 for k in kernels):
            raise ConfigInvalid("kernels must be odd and positive, got %s" % (kernels,))
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigInvalid("dropout must be in [0, 1), got %r" % self.dropout)
        if self.prologue_stride < 1:
            raise ConfigInvalid("prologue stride must be >= 1")
        return self

    @classmethod
    def preset(cls, name: str, **overrides) -> "ModelConfig":
        if name == "paper":
            base = {}
        elif name == "tiny":
            base = dict(block_channels=(32, 32, 64, 64),
                        prologue_channels=32,
                        epilogue_channels=(128, 128))
        else:
            raise ConfigInvalid("unknown model preset %r (tiny|paper)" % name)
        base.update(overrides)
        return cls(**base).validate()

    def sub_blocks(self):
        """Yield (path, in_ch, out_ch, kernel, stride, dilation, separable)."""
        yield ("prologue", self.n_mels, self.prologue_channels,
               self.prologue_kernel, self.prologue_stride, 1, True)
        ch = self.prologue_channels
        for i in range(self.n_blocks):
            for r in range(self.repetitions):
                yield ("block%d.rep%d" % (i, r), ch, self.block_channels[i],
                       self.block_kernels[i], 1, 1, True)
                ch = self.block_channels[i]
        yield ("epilogue1", ch, self.epilogue_channels[0],
               self.epilogue_kernel, 1, self.epilogue_dilation, True)
        yield ("epilogue2", self.epilogue_channels[0], self.epilogue_channels[1],
               1, 1, 1, False)


def param_shapes(cfg: ModelConfig, vocab_size: int) -> dict[str, tuple]:
    """Shape of every named tensor, trainable and running stats alike."""
    shapes: dict[str, tuple] = {}
    for path, c_in, c_out, k, _s, _d, separable in cfg.sub_blocks():
        if separable:
            shapes[path + ".dw"] = (c_in, k)
        shapes[path + ".pw"] = (c_out, c_in)
        shapes[path + ".bn.gain"] = (c_out,)
        shapes[path + ".bn.bias"] = (c_out,)
        shapes[path + ".bn.running_mean"] = (c_out,)
        shapes[path + ".bn.running_var"] = (c_out,)
    shapes["proj.w"] = (vocab_size + 1, cfg.epilogue_channels[1])
    shapes["proj.b"] = (vocab_size + 1,)
    return shapes


RUNNING_STAT_SUFFIXES = (".bn.running_mean", ".bn.running_var")


def trainable_paths(params: dict) -> list[str]:
    return [p for p in sorted(params)
            if not p.endswith(RUNNING_STAT_SUFFIXES)]


def init_params(cfg: ModelConfig, vocab_size: int, seed: int = 0) -> dict:
    """Conv weights uniform(+-sqrt(1/fan_in)); batchnorm at identity."""
    cfg.validate()
    if vocab_size < 1:
        raise ConfigInvalid("vocab_size must be >= 1, got %d" % vocab_size)
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for path, shape in param_shapes(cfg, vocab_size).items():
        if path.endswith(".dw"):
            bound = np.sqrt(1.0 / shape[1])
            params[path] = rng.uniform(-bound, bound, shape)
        elif path.endswith(".pw") or path == "proj.w":
            bound = np.sqrt(1.0 / shape[1])
            params[path] = rng.uniform(-bound, bound, shape)
        elif path.endswith(".bn.gain"):
            params[path] = np.ones(shape)
        elif path.endswith(".bn.running_var"):
            params[path] = np.ones(shape)
        else:  # bn.bias, bn.running_mean, proj.b
            params[path] = np.zeros(shape)
    return params


def _check_shapes(params: dict, cfg: ModelConfig):
    vocab_plus_blank = params["proj.w"].shape[0]
    expected = param_shapes(cfg, vocab_plus_blank - 1)
    for path, shape in expected.items():
        if path not in params:
            raise ShapeMismatch("missing parameter %r" % path)
        if params[path].shape != shape:
            raise ShapeMismatch("parameter %r has shape %s, expected %s"
                                % (path, params[path].shape, shape))


def forward(params: dict, cfg: ModelConfig, x: np.ndarray, mode: str = "eval",
            rng: np.random.Generator | None = None):
    """x: (B, n_mels, T) -> (logits (B, ceil(T/stride), V+1), cache).

    Pure: running statistics are read but never written here. The cache
    carries per-layer contexts plus the batch statistics the training
    loop folds into the running estimates.
    """
    if mode not in ("train", "eval"):
        raise ValueError("mode must be 'train' or 'eval', got %r" % mode)
    if x.ndim != 3 or x.shape[1] != cfg.n_mels:
        raise ShapeMismatch("expected input (B, %d, T), got %s" % (cfg.n_mels, x.shape))
    if mode == "train" and rng is None and cfg.dropout > 0:
        raise ValueError("train-mode forward with dropout needs an rng")
    _check_shapes(params, cfg)

    cache = {"mode": mode, "layers": [], "batch_stats": {}}
    h = x
    for path, _c_in, _c_out, _k, stride, dilation, separable in cfg.sub_blocks():
        ctx: dict = {"path": path, "separable": separable}
        if separable:
            h, ctx["dw"] = layers.depthwise_forward(h, params[path + ".dw"],
                                                    stride, dilation)
        h, ctx["pw"] = layers.pointwise_forward(h, params[path + ".pw"])
        h, ctx["bn"], stats = layers.batchnorm_forward(
            h, params[path + ".bn.gain"], params[path + ".bn.bias"],
            params[path + ".bn.running_mean"], params[path + ".bn.running_var"],
            mode, cfg.bn_eps)
        if mode == "train":
            cache["batch_stats"][path] = stats
        h, ctx["relu"] = layers.relu_forward(h)
        h, ctx["dropout"] = layers.dropout_forward(h, cfg.dropout, mode, rng)
        cache["layers"].append(ctx)

    logits, proj_ctx = layers.pointwise_forward(h, params["proj.w"], params["proj.b"])
    cache["proj"] = proj_ctx
    return np.transpose(logits, (0, 2, 1)), cache


def backward(cache: dict, grad_logits: np.ndarray) -> dict:
    """Gradients for every trainable tensor given d(loss)/d(logits)."""
    if cache.get("mode") != "train":
        raise StaleCache("backward needs a cache from a train-mode forward")
    grads: dict[str, np.ndarray] = {}
    g = np.transpose(grad_logits, (0, 2, 1))
    g, grads["proj.w"], grads["proj.b"] = layers.pointwise_backward(g, cache["proj"])
    for ctx in reversed(cache["layers"]):
        path = ctx["path"]
        g = layers.dropout_backward(g, ctx["dropout"])
        g = layers.relu_backward(g, ctx["relu"])
        g, grads[path + ".bn.gain"], grads[path + ".bn.bias"] = \
            layers.batchnorm_backward(g, ctx["bn"])
        g, grads[path + ".pw"], _ = layers.pointwise_backward(g, ctx["pw"])
        if ctx["separable"]:
            g, grads[path + ".dw"] = layers.depthwise_backward(g, ctx["dw"])
    return grads


def update_running_stats(params: dict, cache: dict, momentum: float) -> None:
    """Fold the cached batch statistics into the running estimates."""
    for path, (mean, var) in cache.get("batch_stats", {}).items():
        rm = params[path + ".bn.running_mean"]
        rv = params[path + ".bn.running_var"]
        rm *= 1.0 - momentum
        rm += momentum * mean
        rv *= 1.0 - momentum
        rv += momentum * var


def count_parameters(params: dict) -> int:
    return sum(int(np.prod(v.shape)) for p, v in params.items()
               if not p.endswith(RUNNING_STAT_SUFFIXES))
