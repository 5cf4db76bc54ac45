"""Character inventory shared by corpus, model and decoders."""

from __future__ import annotations

from collections import Counter
from typing import Iterable

from .errors import VocabMismatch


class Charset:
    """Ordered set of transcript characters; CTC blank is not a member.

    Model output indices: 0 is blank, character i maps to index i + 1.
    """

    def __init__(self, chars: Iterable[str]):
        seen = []
        for ch in chars:
            if len(ch) != 1:
                raise ValueError("charset entries must be single characters, got %r" % ch)
            if ch not in seen:
                seen.append(ch)
        if not seen:
            raise ValueError("charset must not be empty")
        self.chars = tuple(seen)
        self._index = {ch: i + 1 for i, ch in enumerate(self.chars)}

    def __len__(self) -> int:
        return len(self.chars)

    def __contains__(self, ch: str) -> bool:
        return ch in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Charset) and self.chars == other.chars

    def encode(self, text: str, context: str = "") -> list[int]:
        ids = []
        for ch in text:
            if ch not in self._index:
                where = " in %s" % context if context else ""
                raise VocabMismatch("character %r%s is not in the charset" % (ch, where))
            ids.append(self._index[ch])
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        return "".join(self.chars[i - 1] for i in ids)


def build_charset(texts: Iterable[str]) -> tuple[Charset, Counter]:
    """Sorted charset over all characters in `texts`, with frequencies."""
    counts = Counter()
    for text in texts:
        counts.update(text)
    if not counts:
        raise ValueError("cannot build a charset from empty text")
    return Charset(sorted(counts)), counts
