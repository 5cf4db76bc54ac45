"""CTC loss (forward-backward in log space) and best-path decoding.

Blank has index 0; target symbols are 1..V. The gradient with respect
to the unnormalized logits is softmax(logits) minus the per-frame
symbol posterior, computed exactly from the alpha/beta lattices.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyLogits, TargetTooLong

NEG_INF = -np.inf


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def min_frames_for(target) -> int:
    """Fewest frames that can emit `target`: length plus adjacent repeats."""
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def ctc_loss(logits: np.ndarray, target) -> tuple[float, np.ndarray]:
    """Negative log-likelihood of `target` and its exact logits gradient.

    logits: (T, V+1) unnormalized scores; target: symbol ids in 1..V.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[0] == 0:
        raise EmptyLogits("logits must be (T, V+1) with T >= 1, got %s"
                          % (logits.shape,))
    target = list(target)
    t_len, n_sym = logits.shape
    if any(not 1 <= s <= n_sym - 1 for s in target):
        raise ValueError("target symbols must be in 1..%d" % (n_sym - 1))
    if t_len < min_frames_for(target):
        raise TargetTooLong("target needs >= %d frames, logits have %d"
                            % (min_frames_for(target), t_len))

    log_probs = _log_softmax(logits)
    ext = np.zeros(2 * len(target) + 1, dtype=int)
    ext[1::2] = target
    s_len = len(ext)
    # skip transition s-2 -> s allowed where ext[s] is a label differing
    # from ext[s-2]
    can_skip = np.zeros(s_len, dtype=bool)
    if s_len > 2:
        can_skip[2:] = (ext[2:] != 0) & (ext[2:] != ext[:-2])

    lp = log_probs[:, ext]  # (T, S): frame log-prob of each lattice state

    alpha = np.full((t_len, s_len), NEG_INF)
    alpha[0, 0] = lp[0, 0]
    if s_len > 1:
        alpha[0, 1] = lp[0, 1]
    for t in range(1, t_len):
        stay = alpha[t - 1]
        step = np.concatenate(([NEG_INF], alpha[t - 1, :-1]))
        acc = np.logaddexp(stay, step)
        if s_len > 2:
            skip = np.concatenate(([NEG_INF, NEG_INF], alpha[t - 1, :-2]))
            acc = np.where(can_skip, np.logaddexp(acc, skip), acc)
        alpha[t] = acc + lp[t]

    beta = np.full((t_len, s_len), NEG_INF)
    beta[-1, -1] = lp[-1, -1]
    if s_len > 1:
        beta[-1, -2] = lp[-1, -2]
    for t in range(t_len - 2, -1, -1):
        stay = beta[t + 1]
        step = np.concatenate((beta[t + 1, 1:], [NEG_INF]))
        acc = np.logaddexp(stay, step)
        if s_len > 2:
            skip = np.concatenate((beta[t + 1, 2:], [NEG_INF, NEG_INF]))
            can_arrive = np.zeros(s_len, dtype=bool)
            can_arrive[:-2] = can_skip[2:]
            acc = np.where(can_arrive, np.logaddexp(acc, skip), acc)
        beta[t] = acc + lp[t]

    if s_len > 1:
        log_p = np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    else:
        log_p = alpha[-1, -1]
    loss = -float(log_p)

    # occupancy: gamma[t, s] = alpha*beta / (frame prob), normalized by p
    log_gamma = alpha + beta - lp
    grad = np.exp(log_probs)
    for k in set(ext.tolist()):
        cols = np.nonzero(ext == k)[0]
        with np.errstate(divide="ignore"):
            log_post = _logsumexp_cols(log_gamma[:, cols]) - log_p
        grad[:, k] -= np.exp(log_post)
    return loss, grad


def _logsumexp_cols(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    return safe + np.log(np.exp(a - safe[:, None]).sum(axis=1))


def brute_force_ctc_probability(logits: np.ndarray, target) -> float:
    """Oracle: sum softmax-path products over every alignment sequence
    that collapses to `target`. Exponential in T; test-sized inputs only."""
    logits = np.asarray(logits, dtype=np.float64)
    probs = np.exp(_log_softmax(logits))
    t_len, n_sym = probs.shape
    target = tuple(target)
    total = 0.0
    stack = [((), 1.0)]
    for t in range(t_len):
        nxt = []
        for path, p in stack:
            for k in range(n_sym):
                nxt.append((path + (k,), p * probs[t, k]))
        stack = nxt
    for path, p in stack:
        collapsed = []
        prev = None
        for k in path:
            if k != prev and k != 0:
                collapsed.append(k)
            prev = k
        if tuple(collapsed) == target:
            total += p
    return total


def greedy_decode_ids(logits: np.ndarray) -> list[int]:
    """Per-frame argmax, collapse repeats, drop blanks."""
    best = np.argmax(logits, axis=1)
    out = []
    prev = -1
    for k in best:
        if k != prev and k != 0:
            out.append(int(k))
        prev = k
    return out


def greedy_decode(logits: np.ndarray, charset) -> str:
    return charset.decode(greedy_decode_ids(logits))
