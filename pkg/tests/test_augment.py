import numpy as np
import pytest

from asraug.augment import (LARGE, SMALL, SpecAugment, SpecAugmentPolicy,
                            apply_specaugment, choose_policy)


class TestApply:
    def test_zero_widths_identity(self):
        feat = np.random.default_rng(0).normal(size=(30, 64))
        out = apply_specaugment(feat, SpecAugmentPolicy(5, 0, 0),
                                np.random.default_rng(1))
        assert np.array_equal(out, feat)

    def test_masked_cell_bound_large(self):
        rng = np.random.default_rng(7)
        feat = np.ones((200, 64))
        out = apply_specaugment(feat, LARGE, np.random.default_rng(3))
        assert np.sum(out == 0.0) <= 5 * 120 * 50
        assert rng is not None

    def test_unmasked_cells_bit_identical(self):
        feat = np.random.default_rng(5).normal(size=(50, 64))
        out = apply_specaugment(feat, SMALL, np.random.default_rng(9))
        changed = out != feat
        assert np.all(out[changed] == 0.0)

    def test_same_seed_same_masks(self):
        feat = np.random.default_rng(2).normal(size=(40, 64)) + 10.0
        a = apply_specaugment(feat, LARGE, np.random.default_rng(4))
        b = apply_specaugment(feat, LARGE, np.random.default_rng(4))
        assert np.array_equal(a, b)

    def test_small_matrix_clipped(self):
        feat = np.ones((3, 4))
        out = apply_specaugment(feat, LARGE, np.random.default_rng(0))
        assert out.shape == (3, 4)


class TestChoosePolicy:
    def test_at_threshold(self):
        assert choose_policy("pretrain", 100.0) == LARGE

    def test_masri_headset_hours(self):
        # 6h19m of fine-tune data selects the small preset
        assert choose_policy("finetune", 6.32) == SMALL

    def test_just_under_threshold(self):
        assert choose_policy("pretrain", 99.99) == SMALL

    def test_presets(self):
        assert (SMALL.n_rects, SMALL.max_time_width, SMALL.max_freq_width) == (5, 2, 2)
        assert (LARGE.n_rects, LARGE.max_time_width, LARGE.max_freq_width) == (5, 120, 50)

    def test_bad_stage(self):
        with pytest.raises(ValueError):
            choose_policy("warmup", 10.0)


class TestEstimator:
    def test_off_policy_copies(self):
        feats = [np.random.default_rng(i).normal(size=(20, 64)) for i in range(3)]
        out = SpecAugment(policy="off").fit_transform(feats)
        for a, b in zip(out, feats):
            assert np.array_equal(a, b)
            assert a is not b

    def test_per_index_streams_are_stable(self):
        feats = [np.full((25, 64), 5.0) for _ in range(4)]
        a = SpecAugment(policy="large", seed=8).transform(feats)
        b = SpecAugment(policy="large", seed=8).transform(feats)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)
        # different indices get different masks almost surely
        assert not np.array_equal(a[0], a[1])
