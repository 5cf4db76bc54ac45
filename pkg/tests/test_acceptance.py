"""Acceptance suite: one test per exit criterion, at stated tolerances.

Each test prints a PASS line with its measured numbers; the expensive
end-to-end criteria share session fixtures so the whole suite stays
inside its runtime budgets.
"""

import itertools
import json
import math
import os
import time
from functools import lru_cache

import numpy as np
import pytest

from asraug.audio import read_wav
from asraug.augment import LARGE, SMALL, SpecAugmentPolicy, apply_specaugment, choose_policy
from asraug.frontend import FrontendConfig, extract_features
from asraug.lm import beam_decode, bias_demo, train_lm
from asraug.manifest import (Manifest, Utterance, gender_balanced_sample,
                             read_manifest, split_train_test, write_manifest)
from asraug.metrics import score
from asraug.net.checkpoint import Checkpoint
from asraug.net.ctc import (brute_force_ctc_probability, ctc_loss, greedy_decode,
                            min_frames_for)
from asraug.net.network import (ModelConfig, backward, forward, init_params,
                                trainable_paths)
from asraug.net.novograd import OptimizerState, novograd_step
from asraug.net.training import compute_logits
from asraug.synth import (FULL_SCALE_RECIPE, VoiceSpec, estimate_f0,
                          recipe_summary, synthesize_corpus, synthesize_utterance,
                          voice_grid)
from asraug.text import Charset, build_charset
from asraug.toylang import generate_toy_language


def report_pass(criterion, detail):
    print("\nACCEPTANCE %s: PASS (%s)" % (criterion, detail))


class TestCriterion1CtcOracle:
    def test_exhaustive_alignment_equivalence(self):
        t0 = time.time()
        rng = np.random.default_rng(2024)
        n_checked = 0
        worst = 0.0
        while n_checked < 200:
            t_len = int(rng.integers(1, 5))        # T' <= 4
            v = int(rng.integers(1, 4))            # V <= 3
            logits = rng.normal(scale=2.0, size=(t_len, v + 1))
            tgt_len = int(rng.integers(0, 3))      # |target| <= 2
            target = [int(s) for s in rng.integers(1, v + 1, tgt_len)]
            if t_len < min_frames_for(target):
                continue
            loss, _ = ctc_loss(logits, target)
            p = brute_force_ctc_probability(logits, target)
            err = abs(math.exp(-loss) - p)
            worst = max(worst, err)
            assert err < 1e-10
            n_checked += 1
        elapsed = time.time() - t0
        assert elapsed < 5.0
        report_pass("1 ctc-oracle", "200 cases, max |exp(-loss)-p| = %.2e, %.2fs"
                    % (worst, elapsed))


class TestCriterion2GradientChecks:
    def test_ctc_and_network_finite_differences(self):
        t0 = time.time()
        rng = np.random.default_rng(7)

        # CTC loss gradient: relative error < 1e-6
        worst_ctc = 0.0
        for target in ([1], [2, 1], [1, 1], []):
            logits = rng.normal(size=(5, 4))
            _, grad = ctc_loss(logits, target)
            h = 1e-6
            for t in range(5):
                for k in range(4):
                    up, down = logits.copy(), logits.copy()
                    up[t, k] += h
                    down[t, k] -= h
                    num = (ctc_loss(up, target)[0] - ctc_loss(down, target)[0]) / (2 * h)
                    rel = abs(num - grad[t, k]) / max(abs(num), abs(grad[t, k]), 1e-8)
                    worst_ctc = max(worst_ctc, rel)
        assert worst_ctc < 1e-6

        # full network (1-block tiny config, dropout 0): rel err < 1e-4
        cfg = ModelConfig(n_blocks=1, repetitions=1, block_channels=(8,),
                          block_kernels=(3,), prologue_channels=8,
                          prologue_kernel=3, prologue_stride=2,
                          epilogue_channels=(8, 8), epilogue_kernel=3,
                          epilogue_dilation=2, dropout=0.0)
        params = init_params(cfg, 3, seed=1)
        x = rng.normal(size=(2, 64, 12))
        targets = [[1, 2], [3]]

        def total_loss():
            logits, _ = forward(params, cfg, x, "train")
            return sum(ctc_loss(logits[i], targets[i])[0] for i in range(2))

        logits, cache = forward(params, cfg, x, "train")
        grad_logits = np.zeros_like(logits)
        for i in range(2):
            grad_logits[i] = ctc_loss(logits[i], targets[i])[1]
        grads = backward(cache, grad_logits)

        h = 1e-5
        worst_net = 0.0
        pick = np.random.default_rng(3)
        for path in trainable_paths(params):
            flat = params[path].reshape(-1)
            for idx in pick.choice(flat.size, size=min(3, flat.size),
                                   replace=False):
                orig = flat[idx]
                flat[idx] = orig + h
                up = total_loss()
                flat[idx] = orig - h
                down = total_loss()
                flat[idx] = orig
                num = (up - down) / (2 * h)
                ana = grads[path].reshape(-1)[idx]
                rel = abs(num - ana) / max(abs(num), abs(ana), 1e-7)
                worst_net = max(worst_net, rel)
        assert worst_net < 1e-4
        elapsed = time.time() - t0
        assert elapsed < 60.0
        report_pass("2 gradients", "ctc rel %.1e, network rel %.1e, %.1fs"
                    % (worst_ctc, worst_net, elapsed))


class TestCriterion3Novograd:
    def test_hand_computed_example(self):
        params = {"layer": np.array([1.0])}
        state = OptimizerState()
        novograd_step(params, {"layer": np.array([2.0])}, state,
                      lr=0.02, weight_decay=0.0)
        assert abs(state.v["layer"] - 4.0) < 1e-12
        expected_w = 1.0 - 0.02 * (2.0 / (2.0 + 1e-8))
        assert abs(params["layer"][0] - expected_w) < 1e-12

        multi = {"a": np.ones((4, 5)), "b": np.ones(7)}
        st = OptimizerState()
        novograd_step(multi, {"a": np.ones((4, 5)), "b": np.ones(7)}, st)
        assert set(st.v) == {"a", "b"}
        assert all(np.isscalar(v) or isinstance(v, float) for v in st.v.values())
        report_pass("3 novograd", "v=4 exact, w'=%.12f, one scalar per path"
                    % params["layer"][0])


class TestCriterion4MetricsOracle:
    def test_exhaustive_edit_distance(self):
        from asraug.metrics import levenshtein

        @lru_cache(maxsize=None)
        def oracle(a, b):
            if not a:
                return len(b)
            if not b:
                return len(a)
            if a[0] == b[0]:
                return oracle(a[1:], b[1:])
            return 1 + min(oracle(a[1:], b[1:]), oracle(a, b[1:]),
                           oracle(a[1:], b))

        alphabet = ("x", "y", "z")
        seqs = [seq for n in range(6)
                for seq in itertools.product(alphabet, repeat=n)]
        n_pairs = 0
        for a in seqs:
            for b in seqs:
                d, s, i, dl = levenshtein(a, b)
                assert d == oracle(a, b)
                assert d == s + i + dl
                n_pairs += 1

        refs = ["x y z", "zz yy", "x"]
        assert score(refs, refs).error_rate == 0.0
        assert score(refs, refs, "char").error_rate == 0.0
        report_pass("4 metrics-oracle", "%d pairs checked, self-score 0" % n_pairs)


class TestCriterion5SpecAugment:
    def test_identity_bound_and_threshold(self):
        rng = np.random.default_rng(0)
        feat = rng.normal(size=(60, 64))
        out = apply_specaugment(feat, SpecAugmentPolicy(5, 0, 0),
                                np.random.default_rng(1))
        assert np.array_equal(out, feat)

        worst = 0
        for i in range(1000):
            t = int(rng.integers(1, 200))
            f = int(rng.integers(1, 100))
            mat = np.ones((t, f))
            masked = apply_specaugment(mat, LARGE, np.random.default_rng(i))
            n_masked = int(np.sum(masked == 0.0))
            worst = max(worst, n_masked)
            assert n_masked <= 5 * 120 * 50

        assert choose_policy("pretrain", 100.0) == LARGE
        assert choose_policy("pretrain", 99.999) == SMALL
        assert choose_policy("finetune", 0.0) == SMALL
        assert (SMALL.n_rects, SMALL.max_time_width, SMALL.max_freq_width) == (5, 2, 2)
        assert (LARGE.n_rects, LARGE.max_time_width, LARGE.max_freq_width) == (5, 120, 50)
        report_pass("5 specaugment", "identity ok, max masked %d <= 30000, "
                    "threshold flips at 100.0h" % worst)


class TestCriterion10RecipeValidation:
    def test_full_scale_arithmetic_no_audio(self):
        summary = recipe_summary(FULL_SCALE_RECIPE)
        assert summary["n_voices"] == 210
        assert summary["n_utterances"] == 52500
        assert summary["pitch_values"] == 21
        assert summary["rate_values"] == 5
        assert summary["cells_covered"] == {"male": 105, "female": 105}
        report_pass("10a recipe-arithmetic",
                    "210 voices, 52500 utterances, 21x5 grid covered")

    def test_desk_synthesis_determinism_and_monotonicity(self):
        from asraug.audio import encode_wav
        voice = VoiceSpec("female", pitch_step=6, rate_step=1)
        a = synthesize_utterance("gida sopu", voice, rng=np.random.default_rng(4))
        b = synthesize_utterance("gida sopu", voice, rng=np.random.default_rng(4))
        assert encode_wav(a) == encode_wav(b)

        durations = [synthesize_utterance("gida sopu",
                                          VoiceSpec("male", 0, r)).duration
                     for r in (-2, -1, 0, 1, 2)]
        assert all(x > y for x, y in zip(durations, durations[1:]))

        f0s = [estimate_f0(synthesize_utterance("aaa", VoiceSpec("male", p, 0)))
               for p in (-20, -10, 0, 10, 20)]
        assert all(x < y for x, y in zip(f0s, f0s[1:]))
        report_pass("10b desk-synthesis",
                    "bit-identical wavs, rate strictly shortens, f0 rises: %s"
                    % ["%.0f" % f for f in f0s])


class TestCriterion11Manifests:
    def test_round_trip_1000_records(self, tmp_path):
        rng = np.random.default_rng(5)
        words = ["ħobż", "ġobon", "ċavetta", "żgħir", "kelb", "qattus"]
        utts = []
        for i in range(1000):
            text = " ".join(words[k] for k in rng.integers(0, len(words),
                                                           rng.integers(1, 6)))
            spk = int(rng.integers(0, 20))
            utts.append(Utterance(
                audio_filepath="clip%04d.wav" % i,
                duration=float(np.round(rng.uniform(0.3, 11.0), 3)),
                text=text,
                speaker_id="spk%02d" % spk,
                gender="male" if spk % 2 else "female",
                label_source=("gold", "noisy", "synthetic")[rng.integers(0, 3)]))
        m = Manifest(utts)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_manifest(m, p1)
        write_manifest(read_manifest(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

        back = read_manifest(p1)
        assert any("ħ" in u.text for u in back)
        assert any("ż" in u.text for u in back)

        train, test = split_train_test(back, n_test=250, seed=3)
        assert len(test) == 250
        assert len(train) + len(test) == len(back)
        assert not ({u.audio_filepath for u in train}
                    & {u.audio_filepath for u in test})

        gaps = []
        for trial in range(10):
            sample = gender_balanced_sample(back, target_hours=0.2, seed=trial)
            male = sum(u.duration for u in sample if u.gender == "male")
            female = sum(u.duration for u in sample if u.gender == "female")
            longest = max(u.duration for u in sample)
            assert abs(male - female) <= longest + 1e-9
            gaps.append(abs(male - female))
        report_pass("11 manifests", "1000-record byte round-trip, partition ok, "
                    "max gender gap %.1fs" % max(gaps))
