"""Word-level back-off n-gram language model and LM-fused beam decoding.

Scoring uses stupid backoff (factor 0.4): relative frequency at the
longest matching context, discounted once per backed-off level, with a
fixed floor for out-of-vocabulary words. Decoding is a prefix beam
search over CTC posteriors; each completed word adds
alpha * lm_logprob + beta to the hypothesis score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCorpus
from .metrics import canonicalize
from .net.ctc import greedy_decode_ids
from .text import Charset

BOS = "<s>"
BACKOFF = 0.4
OOV_LOG_PROB = math.log(1e-8)


@dataclass
class NGramLM:
    order: int
    counts: dict = field(default_factory=dict)   # ngram tuple -> int
    total_words: int = 0
    vocab: set = field(default_factory=set)
    backoff: float = BACKOFF

    def word_logp(self, word: str, history: tuple) -> float:
        """Stupid-backoff log score of `word` after `history`."""
        context = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        discount = 0.0
        while context:
            num = self.counts.get(context + (word,))
            den = self.counts.get(context)
            if num and den:
                return discount + math.log(num / den)
            discount += math.log(self.backoff)
            context = context[1:]
        uni = self.counts.get((word,))
        if uni:
            return discount + math.log(uni / self.total_words)
        return discount + OOV_LOG_PROB

    def sequence_logp(self, words) -> float:
        history: tuple = (BOS,) * (self.order - 1)
        total = 0.0
        for w in words:
            total += self.word_logp(w, history)
            history = history + (w,)
        return total


def train_lm(lines, order: int = 6, exclude=None) -> NGramLM:
    """Count 1..order grams over sentences, with start-of-sentence padding.

    `exclude` removes exact-match sentences (after canonicalization)
    before any counting.
    """
    if order < 1:
        raise ValueError("order must be >= 1, got %d" % order)
    excluded = {canonicalize(s) for s in exclude} if exclude else set()
    lm = NGramLM(order=order)
    n_sentences = 0
    for line in lines:
        sent = canonicalize(line)
        if not sent or sent in excluded:
            continue
        words = sent.split()
        n_sentences += 1
        lm.vocab.update(words)
        lm.total_words += len(words)
        padded = [BOS] * (order - 1) + words
        for n in range(1, order + 1):
            for i in range(len(padded) - n + 1):
                gram = tuple(padded[i:i + n])
                if all(w == BOS for w in gram):
                    continue
                lm.counts[gram] = lm.counts.get(gram, 0) + 1
    if n_sentences == 0:
        raise EmptyCorpus("no sentences left to train the language model")
    return lm


def lm_score(lm: NGramLM, words) -> float:
    """Log-probability of a word sequence; empty sequences score 0."""
    return lm.sequence_logp(list(words))


def write_lm(lm: NGramLM, path) -> None:
    """Sorted, diffable text dump: header then 'n-gram<TAB>count' lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("order=%d backoff=%g total_words=%d\n"
                 % (lm.order, lm.backoff, lm.total_words))
        for gram in sorted(lm.counts):
            fh.write("%s\t%d\n" % (" ".join(gram), lm.counts[gram]))


def read_lm(path) -> NGramLM:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        fields = dict(kv.split("=") for kv in header)
        lm = NGramLM(order=int(fields["order"]), backoff=float(fields["backoff"]),
                     total_words=int(fields["total_words"]))
        for line in fh:
            gram_text, count = line.rstrip("\n").rsplit("\t", 1)
            gram = tuple(gram_text.split(" "))
            lm.counts[gram] = int(count)
            if len(gram) == 1 and gram[0] != BOS:
                lm.vocab.add(gram[0])
    return lm


# --- prefix beam search with shallow fusion -----------------------------

def _words_of(prefix: tuple, charset: Charset) -> list[str]:
    return charset.decode(prefix).split()


def _trailing_word(prefix: tuple, charset: Charset) -> str:
    text = charset.decode(prefix)
    return text.rsplit(" ", 1)[-1]


def beam_decode(logits: np.ndarray, lm: NGramLM | None, charset: Charset,
                beam_width: int = 16, alpha: float = 0.8,
                beta: float = 1.0) -> str:
    """Best transcript under CTC mass plus word-level LM fusion.

    A width-1 beam with alpha=beta=0 is exactly best-path (greedy)
    decoding, so that configuration delegates to it.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if beam_width == 1 and alpha == 0.0 and beta == 0.0:
        return charset.decode(greedy_decode_ids(logits))

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    space_id = charset.encode(" ")[0] if " " in charset else None

    def word_bonus(prefix: tuple) -> float:
        # LM reward for the word just completed by emitting a space
        word = _trailing_word(prefix, charset)
        if not word:
            return 0.0
        if lm is None or alpha == 0.0:
            return beta
        history = (BOS,) * (lm.order - 1) + tuple(_words_of(prefix, charset)[:-1])
        return alpha * lm.word_logp(word, history) + beta

    NEG = -np.inf
    # prefix -> [log mass ending in blank, log mass ending in non-blank]
    beams: dict[tuple, list[float]] = {(): [0.0, NEG]}
    for t in range(log_probs.shape[0]):
        frame = log_probs[t]
        nxt: dict[tuple, list[float]] = {}

        def add(prefix, which, value):
            cell = nxt.setdefault(prefix, [NEG, NEG])
            cell[which] = np.logaddexp(cell[which], value)

        for prefix, (lp_b, lp_nb) in beams.items():
            total = np.logaddexp(lp_b, lp_nb)
            add(prefix, 0, total + frame[0])
            last = prefix[-1] if prefix else None
            for sym in range(1, len(frame)):
                lp_sym = frame[sym]
                if sym == last:
                    add(prefix, 1, lp_nb + lp_sym)
                    extended = lp_b + lp_sym
                else:
                    extended = total + lp_sym
                new_prefix = prefix + (sym,)
                if sym == space_id:
                    extended += word_bonus(prefix)
                add(new_prefix, 1, extended)

        ranked = sorted(nxt.items(),
                        key=lambda kv: (-np.logaddexp(kv[1][0], kv[1][1]), kv[0]))
        beams = dict(ranked[:beam_width])

    def final_score(prefix, masses):
        score = np.logaddexp(masses[0], masses[1])
        if prefix and prefix[-1] != space_id:
            score += word_bonus(prefix)
        return score

    best = max(beams.items(), key=lambda kv: (final_score(kv[0], kv[1]), kv[0]))
    return canonicalize(charset.decode(best[0]))


def bias_demo(checkpoint, text_corpus_lines, test_manifest, order: int = 6,
              beam_width: int = 16, alpha: float = 0.8, beta: float = 1.0):
    """WER with no LM, an LM trained without the test sentences
    ('against'), and an LM trained on them ('in favor').

    Returns {"no_lm", "lm_against", "lm_in_favor"} ScoreReports.
    """
    from .frontend import FrontendConfig, extract_features
    from .metrics import score
    from .net.training import compute_logits
    from .audio import read_wav

    test_texts = test_manifest.texts()
    lm_favor = train_lm(text_corpus_lines, order=order)
    lm_against = train_lm(text_corpus_lines, order=order, exclude=test_texts)

    fe_cfg = FrontendConfig()
    feats = [extract_features(read_wav(u.resolve_path(test_manifest.base_dir)),
                              fe_cfg)
             for u in test_manifest]
    logits_list = compute_logits(checkpoint.params, checkpoint.model_config, feats)
    charset = checkpoint.charset
    hyps_greedy = [charset.decode(greedy_decode_ids(lg)) for lg in logits_list]
    hyps_favor = [beam_decode(lg, lm_favor, charset, beam_width, alpha, beta)
                  for lg in logits_list]
    hyps_against = [beam_decode(lg, lm_against, charset, beam_width, alpha, beta)
                    for lg in logits_list]
    return {
        "no_lm": score(test_texts, hyps_greedy),
        "lm_against": score(test_texts, hyps_against),
        "lm_in_favor": score(test_texts, hyps_favor),
    }


def brute_force_fused_search(logits: np.ndarray, lm: NGramLM | None,
                             charset: Charset, alpha: float,
                             beta: float) -> str:
    """Oracle: enumerate every transcript of length <= T and score it as
    total CTC mass plus alpha * lm + beta per word. Test-sized only."""
    from itertools import product

    from .net.ctc import brute_force_ctc_probability

    t_len = logits.shape[0]
    best_text, best_score = "", -np.inf
    for n in range(0, t_len + 1):
        for ids in product(range(1, len(charset) + 1), repeat=n):
            p = brute_force_ctc_probability(logits, ids)
            if p <= 0.0:
                continue
            text = charset.decode(ids)
            words = text.split()
            score = math.log(p) + beta * len(words)
            if lm is not None and alpha:
                score += alpha * lm.sequence_logp(words)
            text_c = canonicalize(text)
            if score > best_score + 1e-12 or \
                    (abs(score - best_score) <= 1e-12 and text_c < best_text):
                best_text, best_score = text_c, score
    return best_text
