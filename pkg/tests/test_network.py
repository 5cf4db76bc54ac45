import numpy as np
import pytest

from asraug.errors import ConfigInvalid, ShapeMismatch, StaleCache
from asraug.net.ctc import ctc_loss
from asraug.net.network import (ModelConfig, backward, count_parameters, forward,
                                init_params, param_shapes, trainable_paths,
                                update_running_stats)

MICRO = ModelConfig(n_blocks=1, repetitions=1, block_channels=(8,),
                    block_kernels=(3,), prologue_channels=8, prologue_kernel=3,
                    prologue_stride=2, epilogue_channels=(8, 8),
                    epilogue_kernel=3, epilogue_dilation=2, dropout=0.0)


class TestInit:
    def test_deterministic(self):
        a = init_params(MICRO, 4, seed=5)
        b = init_params(MICRO, 4, seed=5)
        assert sorted(a) == sorted(b)
        for k in a:
            assert np.array_equal(a[k], b[k])

    def test_batchnorm_identity(self):
        params = init_params(MICRO, 4, seed=0)
        for k, v in params.items():
            if k.endswith(".bn.gain") or k.endswith(".bn.running_var"):
                assert np.all(v == 1.0)
            if k.endswith(".bn.bias") or k.endswith(".bn.running_mean"):
                assert np.all(v == 0.0)

    def test_parameter_count_by_hand(self):
        v = 4
        params = init_params(MICRO, v, seed=1)
        # prologue: dw 64*3, pw 8*64, bn 2*8; block: dw 8*3, pw 8*8, bn 16
        # epilogue1: dw 8*3, pw 64, bn 16; epilogue2: pw 64, bn 16
        # proj: 5*8 + 5
        expected = (64 * 3 + 8 * 64 + 16) + (24 + 64 + 16) + (24 + 64 + 16) \
            + (64 + 16) + (5 * 8 + 5)
        assert count_parameters(params) == expected

    def test_invalid_config(self):
        with pytest.raises(ConfigInvalid):
            ModelConfig(block_kernels=(11, 13, 17, 20)).validate()
        with pytest.raises(ConfigInvalid):
            ModelConfig(dropout=1.0).validate()
        with pytest.raises(ConfigInvalid):
            ModelConfig.preset("huge")

    def test_presets(self):
        tiny = ModelConfig.preset("tiny")
        assert tiny.block_channels == (32, 32, 64, 64)
        paper = ModelConfig.preset("paper")
        assert paper.block_channels == (256, 256, 512, 512)
        assert paper.dropout == pytest.approx(0.2)
        assert paper.n_blocks == 4 and paper.repetitions == 2


class TestForward:
    def test_eval_deterministic(self):
        params = init_params(MICRO, 3, seed=2)
        x = np.random.default_rng(0).normal(size=(2, 64, 32))
        a, _ = forward(params, MICRO, x, "eval")
        b, _ = forward(params, MICRO, x, "eval")
        assert np.array_equal(a, b)

    def test_stride_arithmetic(self):
        params = init_params(MICRO, 3, seed=2)
        for t in (16, 31, 32, 33, 48):
            x = np.zeros((1, 64, t))
            logits, _ = forward(params, MICRO, x, "eval")
            assert logits.shape == (1, -(-t // 2), 4)

    def test_train_dropout_needs_rng(self):
        cfg = ModelConfig(n_blocks=1, repetitions=1, block_channels=(8,),
                          block_kernels=(3,), prologue_channels=8,
                          prologue_kernel=3, epilogue_channels=(8, 8),
                          epilogue_kernel=3, dropout=0.2)
        params = init_params(cfg, 3, seed=2)
        with pytest.raises(ValueError):
            forward(params, cfg, np.zeros((1, 64, 16)), "train")

    def test_shape_mismatch(self):
        params = init_params(MICRO, 3, seed=2)
        with pytest.raises(ShapeMismatch):
            forward(params, MICRO, np.zeros((1, 32, 16)), "eval")


class TestBackward:
    def test_stale_cache(self):
        params = init_params(MICRO, 3, seed=2)
        logits, cache = forward(params, MICRO, np.zeros((1, 64, 16)), "eval")
        with pytest.raises(StaleCache):
            backward(cache, np.zeros_like(logits))

    def test_zero_grad_in_zero_grads_out(self):
        params = init_params(MICRO, 3, seed=3)
        x = np.random.default_rng(1).normal(size=(2, 64, 16))
        logits, cache = forward(params, MICRO, x, "train", np.random.default_rng(0))
        grads = backward(cache, np.zeros_like(logits))
        for g in grads.values():
            assert np.all(g == 0.0)

    def test_grad_shapes_match_params(self):
        params = init_params(MICRO, 3, seed=3)
        x = np.random.default_rng(1).normal(size=(2, 64, 16))
        logits, cache = forward(params, MICRO, x, "train", np.random.default_rng(0))
        grads = backward(cache, np.ones_like(logits))
        assert sorted(grads) == trainable_paths(params)
        for k, g in grads.items():
            assert g.shape == params[k].shape

    def test_full_network_finite_differences(self):
        """End-to-end CTC-through-network gradient check (dropout 0)."""
        rng = np.random.default_rng(8)
        params = init_params(MICRO, 3, seed=11)
        x = rng.normal(size=(2, 64, 12))
        targets = [[1, 2], [3]]

        def total_loss():
            logits, _ = forward(params, MICRO, x, "train")
            return sum(ctc_loss(logits[i], targets[i])[0] for i in range(2))

        logits, cache = forward(params, MICRO, x, "train")
        grad_logits = np.zeros_like(logits)
        for i in range(2):
            _, g = ctc_loss(logits[i], targets[i])
            grad_logits[i] = g
        grads = backward(cache, grad_logits)

        h = 1e-5
        rng_pick = np.random.default_rng(4)
        for path in trainable_paths(params):
            w = params[path]
            flat = w.reshape(-1)
            for idx in rng_pick.choice(flat.size, size=min(4, flat.size),
                                       replace=False):
                orig = flat[idx]
                flat[idx] = orig + h
                up = total_loss()
                flat[idx] = orig - h
                down = total_loss()
                flat[idx] = orig
                num = (up - down) / (2 * h)
                ana = grads[path].reshape(-1)[idx]
                denom = max(abs(num), abs(ana), 1e-7)
                assert abs(num - ana) / denom < 1e-4, path


class TestRunningStats:
    def test_update(self):
        params = init_params(MICRO, 3, seed=0)
        x = np.random.default_rng(2).normal(3.0, 2.0, size=(4, 64, 16))
        _, cache = forward(params, MICRO, x, "train")
        update_running_stats(params, cache, momentum=0.1)
        mean, var = cache["batch_stats"]["prologue"]
        assert np.allclose(params["prologue.bn.running_mean"], 0.1 * mean)
        assert np.allclose(params["prologue.bn.running_var"],
                           0.9 * 1.0 + 0.1 * var)

    def test_shapes_table(self):
        shapes = param_shapes(MICRO, 3)
        assert shapes["proj.w"] == (4, 8)
        assert shapes["prologue.dw"] == (64, 3)
        assert "epilogue2.dw" not in shapes  # 1x1 conv is pointwise only
