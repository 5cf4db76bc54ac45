"""Forward/backward primitives for the 1-D separable-conv stack.

All functions are pure: forward returns (output, ctx) and the matching
backward consumes ctx. Tensors are (batch, channels, time) float64;
convolutions use same-padding, so output time is ceil(T / stride).
"""

from __future__ import annotations

import numpy as np


def _same_pad(kernel: int, dilation: int) -> int:
    # kernels are odd, so same-padding is symmetric
    return dilation * (kernel - 1) // 2


def out_time(t: int, stride: int) -> int:
    return -(-t // stride)


def depthwise_forward(x, w, stride=1, dilation=1):
    """x: (B, C, T), w: (C, K) -> y: (B, C, ceil(T/stride))."""
    b, c, t = x.shape
    k = w.shape[1]
    pad = _same_pad(k, dilation)
    to = out_time(t, stride)
    xp = np.zeros((b, c, t + 2 * pad))
    xp[:, :, pad:pad + t] = x
    y = np.zeros((b, c, to))
    for j in range(k):
        start = j * dilation
        y += w[None, :, j, None] * xp[:, :, start:start + stride * (to - 1) + 1:stride]
    return y, (xp, w, stride, dilation, t, to)


def depthwise_backward(grad, ctx):
    xp, w, stride, dilation, t, to = ctx
    k = w.shape[1]
    pad = _same_pad(k, dilation)
    dw = np.zeros_like(w)
    dxp = np.zeros_like(xp)
    for j in range(k):
        start = j * dilation
        sl = slice(start, start + stride * (to - 1) + 1, stride)
        dw[:, j] = np.sum(grad * xp[:, :, sl], axis=(0, 2))
        dxp[:, :, sl] += w[None, :, j, None] * grad
    return dxp[:, :, pad:pad + t], dw


def pointwise_forward(x, w, bias=None):
    """x: (B, C, T), w: (O, C) -> y: (B, O, T)."""
    y = np.einsum("oc,bct->bot", w, x, optimize=True)
    if bias is not None:
        y += bias[None, :, None]
    return y, (x, w, bias is not None)


def pointwise_backward(grad, ctx):
    x, w, has_bias = ctx
    dw = np.einsum("bot,bct->oc", grad, x, optimize=True)
    dx = np.einsum("oc,bot->bct", w, grad, optimize=True)
    db = grad.sum(axis=(0, 2)) if has_bias else None
    return dx, dw, db


def batchnorm_forward(x, gain, bias, running_mean, running_var, mode, eps=1e-5):
    """Per-channel normalization over (batch, time)."""
    if mode == "train":
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    y = gain[None, :, None] * xhat + bias[None, :, None]
    ctx = (xhat, gain, inv_std, mode)
    stats = (mean, var)
    return y, ctx, stats


def batchnorm_backward(grad, ctx):
    xhat, gain, inv_std, mode = ctx
    if mode != "train":
        raise ValueError("batchnorm backward requires train-mode statistics")
    dgain = np.sum(grad * xhat, axis=(0, 2))
    dbias = np.sum(grad, axis=(0, 2))
    gx = gain[None, :, None] * grad
    dx = inv_std[None, :, None] * (
        gx
        - gx.mean(axis=(0, 2))[None, :, None]
        - xhat * np.mean(gx * xhat, axis=(0, 2))[None, :, None]
    )
    return dx, dgain, dbias


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(grad, mask):
    return grad * mask


def dropout_forward(x, p, mode, rng):
    """Inverted dropout: active only in train mode with p > 0."""
    if mode != "train" or p <= 0.0:
        return x, None
    keep = rng.random(x.shape) >= p
    return x * keep / (1.0 - p), (keep, p)


def dropout_backward(grad, ctx):
    if ctx is None:
        return grad
    keep, p = ctx
    return grad * keep / (1.0 - p)
