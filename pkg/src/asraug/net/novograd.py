"""Layer-wise adaptive gradient optimizer.

Each named tensor ("layer") keeps one scalar second moment, the squared
gradient norm smoothed by beta2, and a momentum tensor of normalized
gradients plus weight decay. Running batchnorm statistics never appear
in the gradient dict, so they are untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteGradient


@dataclass
class OptimizerState:
    step: int = 0
    v: dict = field(default_factory=dict)   # path -> float
    m: dict = field(default_factory=dict)   # path -> ndarray


def novograd_step(params: dict, grads: dict, state: OptimizerState,
                  lr: float = 0.02, beta1: float = 0.95, beta2: float = 0.5,
                  weight_decay: float = 0.001, eps: float = 1e-8):
    """One update, in place. First step seeds v with the raw norm^2."""
    unknown = set(grads) - set(params)
    if unknown:
        raise KeyError("gradients for unknown layer paths: %s" % sorted(unknown))
    for path in sorted(grads):
        if not np.all(np.isfinite(grads[path])):
            raise NonFiniteGradient("non-finite gradient in layer %r" % path)
    for path in sorted(grads):
        g = grads[path]
        w = params[path]
        norm_sq = float(np.vdot(g, g).real)
        if path not in state.v:
            v = norm_sq
        else:
            v = beta2 * state.v[path] + (1.0 - beta2) * norm_sq
        m_prev = state.m.get(path, 0.0)
        m = beta1 * m_prev + (g / (np.sqrt(v) + eps) + weight_decay * w)
        w -= lr * m
        state.v[path] = v
        state.m[path] = m
    state.step += 1
    return params, state
