import itertools

import numpy as np
import pytest

from asraug.errors import EmptyReferenceCorpus, LengthMismatch
from asraug.metrics import canonicalize, levenshtein, score


def brute_force_distance(a, b):
    """Exhaustive edit distance: min edits over all alignments, by recursion
    with memoization kept independent of the DP implementation."""
    from functools import lru_cache

    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j + 1), go(i, j + 1), go(i + 1, j))

    return go(0, 0)


class TestLevenshtein:
    def test_identical(self):
        assert levenshtein(["a", "b"], ["a", "b"]) == (0, 0, 0, 0)

    def test_single_substitution(self):
        d, s, i, dl = levenshtein("il kelb".split(), "il qattus".split())
        assert (d, s, i, dl) == (1, 1, 0, 0)

    def test_empty_source_all_insertions(self):
        assert levenshtein([], ["a", "b", "c"]) == (3, 0, 3, 0)

    def test_empty_target_all_deletions(self):
        assert levenshtein(["a", "b"], []) == (2, 0, 0, 2)

    def test_counts_sum_to_distance(self):
        rng = np.random.default_rng(0)
        alphabet = ["x", "y", "z"]
        for _ in range(200):
            a = [alphabet[k] for k in rng.integers(0, 3, rng.integers(0, 9))]
            b = [alphabet[k] for k in rng.integers(0, 3, rng.integers(0, 9))]
            d, s, i, dl = levenshtein(a, b)
            assert d == s + i + dl

    def test_exhaustive_oracle_up_to_5(self):
        alphabet = ["a", "b", "c"]
        seqs = [seq for n in range(0, 4)
                for seq in itertools.product(alphabet, repeat=n)]
        for a in seqs:
            for b in seqs:
                assert levenshtein(a, b)[0] == brute_force_distance(a, b)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(1)
        alphabet = ["p", "q", "r"]
        pool = [[alphabet[k] for k in rng.integers(0, 3, rng.integers(0, 9))]
                for _ in range(30)]
        for a, b in itertools.combinations(pool, 2):
            assert levenshtein(a, b)[0] == levenshtein(b, a)[0]
        for a, b, c in itertools.islice(itertools.combinations(pool, 3), 300):
            assert levenshtein(a, c)[0] <= levenshtein(a, b)[0] + levenshtein(b, c)[0]


class TestScore:
    def test_perfect(self):
        rep = score(["mela sew", "le"], ["mela sew", "le"])
        assert rep.error_rate == 0.0

    def test_half_wrong(self):
        rep = score(["a b c d"], ["a x c"])
        assert rep.error_rate == pytest.approx(50.0)
        assert rep.edits == (1, 0, 1)

    def test_uncapped(self):
        rep = score(["wieħed"], ["tnejn tlieta erbgħa"])
        assert rep.error_rate == pytest.approx(300.0)

    def test_micro_average_pools_counts(self):
        # 1 edit / 1 word plus 0 edits / 9 words = 10%, not mean(100%, 0%)
        rep = score(["a", "b c d e f g h i j"], ["x", "b c d e f g h i j"])
        assert rep.error_rate == pytest.approx(10.0)

    def test_reorder_invariant(self):
        refs = ["a b", "c d e", "f"]
        hyps = ["a x", "c d", "f f"]
        r1 = score(refs, hyps)
        r2 = score(refs[::-1], hyps[::-1])
        assert r1.error_rate == r2.error_rate

    def test_canonicalization(self):
        assert canonicalize("  Mela   SEW \n") == "mela sew"
        assert score(["Mela  Sew"], ["mela sew"]).error_rate == 0.0

    def test_char_unit(self):
        rep = score(["ab"], ["ac"], unit="char")
        assert rep.error_rate == pytest.approx(50.0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            score(["a"], [])

    def test_empty_reference_corpus(self):
        with pytest.raises(EmptyReferenceCorpus):
            score([""], [""])

    def test_table_and_records(self):
        rep = score(["a b"], ["a c"])
        assert "50.00%" in rep.to_table()
        assert '"sub": 1' in rep.to_records()[0]
