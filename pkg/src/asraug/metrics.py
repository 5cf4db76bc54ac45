"""WER/CER scoring via edit distance.

Corpus scores micro-average: edit counts are pooled over utterances and
divided by the pooled reference length. WER is uncapped above 100%.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import EmptyReferenceCorpus, LengthMismatch


def canonicalize(text: str) -> str:
    """Trim, collapse internal whitespace, lowercase."""
    return " ".join(text.split()).lower()


def levenshtein(a, b) -> tuple[int, int, int, int]:
    """Minimal unit-cost edit distance from reference `a` to hypothesis `b`.

    Returns (distance, substitutions, insertions, deletions). Ties are
    resolved preferring substitution, then insertion, then deletion, so
    the count decomposition is deterministic.
    """
    a, b = list(a), list(b)
    n, m = len(a), len(b)
    # cell = (distance, subs, ins, dels)
    prev = [(j, 0, j, 0) for j in range(m + 1)]
    for i in range(1, n + 1):
        cur = [(i, 0, 0, i)]
        for j in range(1, m + 1):
            if a[i - 1] == b[j - 1]:
                cur.append(prev[j - 1])
                continue
            d_sub, s_sub, i_sub, del_sub = prev[j - 1]
            d_ins, s_ins, i_ins, del_ins = cur[j - 1]
            d_del, s_del, i_del, del_del = prev[j]
            best = min(d_sub, d_ins, d_del) + 1
            if d_sub + 1 == best:
                cur.append((best, s_sub + 1, i_sub, del_sub))
            elif d_ins + 1 == best:
                cur.append((best, s_ins, i_ins + 1, del_ins))
            else:
                cur.append((best, s_del, i_del, del_del + 1))
        prev = cur
    return prev[m]


@dataclass
class UtteranceScore:
    index: int
    ref: str
    hyp: str
    n_ref: int
    edits: tuple[int, int, int]  # (sub, ins, del)

    @property
    def n_edits(self) -> int:
        return sum(self.edits)


@dataclass
class ScoreReport:
    unit: str
    error_rate: float
    n_ref_tokens: int
    edits: tuple[int, int, int]
    rows: list[UtteranceScore] = field(default_factory=list)

    def to_table(self) -> str:
        lines = ["idx\tedits\tS\tI\tD\tref\thyp"]
        for row in self.rows:
            s, i, d = row.edits
            lines.append("%d\t%d\t%d\t%d\t%d\t%s\t%s"
                         % (row.index, row.n_edits, s, i, d, row.ref, row.hyp))
        s, i, d = self.edits
        lines.append("%s: %.2f%%  (S=%d I=%d D=%d / N=%d)"
                     % (self.unit.upper() + ("ER" if self.unit == "word" else ""),
                        self.error_rate, s, i, d, self.n_ref_tokens))
        return "\n".join(lines)

    def to_records(self) -> list[str]:
        out = []
        for row in self.rows:
            out.append(json.dumps({"index": row.index, "ref": row.ref, "hyp": row.hyp,
                                   "n_ref": row.n_ref, "sub": row.edits[0],
                                   "ins": row.edits[1], "del": row.edits[2]},
                                  ensure_ascii=False))
        return out


def score(refs: list[str], hyps: list[str], unit: str = "word") -> ScoreReport:
    """Micro-averaged error rate in percent over a corpus of pairs."""
    if unit not in ("word", "char"):
        raise ValueError("unit must be 'word' or 'char', got %r" % unit)
    if len(refs) != len(hyps):
        raise LengthMismatch("got %d references but %d hypotheses"
                             % (len(refs), len(hyps)))
    total = [0, 0, 0]
    n_ref_total = 0
    rows = []
    for idx, (ref, hyp) in enumerate(zip(refs, hyps)):
        ref_c, hyp_c = canonicalize(ref), canonicalize(hyp)
        if unit == "word":
            ref_toks, hyp_toks = ref_c.split(), hyp_c.split()
        else:
            ref_toks, hyp_toks = list(ref_c), list(hyp_c)
        _, s, i, d = levenshtein(ref_toks, hyp_toks)
        total[0] += s
        total[1] += i
        total[2] += d
        n_ref_total += len(ref_toks)
        rows.append(UtteranceScore(idx, ref_c, hyp_c, len(ref_toks), (s, i, d)))
    if n_ref_total == 0:
        raise EmptyReferenceCorpus("reference corpus has zero %s tokens" % unit)
    rate = 100.0 * sum(total) / n_ref_total
    return ScoreReport(unit=unit, error_rate=rate, n_ref_tokens=n_ref_total,
                       edits=tuple(total), rows=rows)


def wer(refs: list[str], hyps: list[str]) -> float:
    return score(refs, hyps, "word").error_rate


def cer(refs: list[str], hyps: list[str]) -> float:
    return score(refs, hyps, "char").error_rate
