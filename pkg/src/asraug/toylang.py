"""Deterministic toy-language generator.

Builds a pseudo-Maltese vocabulary of CV-syllable words over a
Maltese-inspired character inventory and samples sentences from it,
giving the pipeline a desk-scale stand-in for a real text corpus.
"""

from __future__ import annotations

import numpy as np

# silent graphemes (h, għ) are excluded so every word is audible
CONSONANTS = "bdfgjklmnprstvwzċġħż"
VOWELS = "aeiou"
CHARSET = sorted(set(CONSONANTS + VOWELS + " "))


def toy_vocabulary(seed: int, vocab_size: int) -> list[str]:
    """`vocab_size` distinct words of 1-3 CV syllables."""
    if vocab_size < 2:
        raise ValueError("vocab_size must be >= 2, got %d" % vocab_size)
    rng = np.random.default_rng(seed)
    words: list[str] = []
    seen = set()
    while len(words) < vocab_size:
        n_syll = int(rng.integers(1, 4))
        word = "".join(CONSONANTS[rng.integers(len(CONSONANTS))]
                       + VOWELS[rng.integers(len(VOWELS))]
                       for _ in range(n_syll))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def generate_toy_language(seed: int, vocab_size: int, n_sentences: int,
                          words_per_sentence_range: tuple[int, int]) -> list[str]:
    """Sentences of uniformly sampled vocabulary words; fully seeded."""
    lo, hi = words_per_sentence_range
    if not 1 <= lo <= hi:
        raise ValueError("bad words_per_sentence_range %r"
                         % (words_per_sentence_range,))
    vocab = toy_vocabulary(seed, vocab_size)
    rng = np.random.default_rng(seed + 1)
    lines = []
    for _ in range(n_sentences):
        n_words = int(rng.integers(lo, hi + 1))
        lines.append(" ".join(vocab[rng.integers(len(vocab))]
                              for _ in range(n_words)))
    return lines
