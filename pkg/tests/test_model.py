import numpy as np
import pytest

from wfdl.loss import wfdl_gradient, wfdl_loss
from wfdl.model import (ArchConfig, backward, conv_backward, conv_forward, encode_shapes, forward,
                        init_params, reconstruct, upsample2, upsample2_backward)

TINY = ArchConfig(8, 1, ((4, 2), (4, 2)))
FULL_LADDER = [(128, 128, 32), (64, 64, 32), (32, 32, 64), (16, 16, 64),
           (8, 8, 128), (4, 4, 128), (2, 2, 256), (2, 2, 256)]


def naive_conv(x, kernel, bias, stride):
    """Loop-based 'same' convolution, NHWC input, (O, I, k, k) kernel."""
    b, h, w, _ = x.shape
    cout, _, k, _ = kernel.shape
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    ho, wo = (h + 2 * pad - k) // stride + 1, (w + 2 * pad - k) // stride + 1
    out = np.zeros((b, ho, wo, cout))
    for n in range(b):
        for i in range(ho):
            for j in range(wo):
                patch = xp[n, i * stride:i * stride + k, j * stride:j * stride + k]
                for o in range(cout):
                    out[n, i, j, o] = (patch * kernel[o].transpose(1, 2, 0)).sum() + bias[o]
    return out


class TestPrimitives:
    @pytest.mark.parametrize("stride,k", [(1, 3), (2, 3), (2, 1), (1, 1)])
    def test_conv_matches_loops(self, rng, stride, k):
        x = rng.standard_normal((2, 6, 6, 3))
        kernel = rng.standard_normal((4, 3, k, k))
        bias = rng.standard_normal(4)
        np.testing.assert_allclose(conv_forward(x, kernel, bias, stride),
                                   naive_conv(x, kernel, bias, stride), atol=1e-12)

    @pytest.mark.parametrize("stride", [1, 2])
    def test_conv_backward_is_adjoint(self, rng, stride):
        x = rng.standard_normal((2, 6, 6, 3))
        kernel = rng.standard_normal((4, 3, 3, 3))
        bias = rng.standard_normal(4)
        dout = rng.standard_normal(conv_forward(x, kernel, bias, stride).shape)
        dx, dk, db = conv_backward(x, kernel, stride, dout)
        # <conv(x), dout> is linear in x, kernel and bias separately
        dx_probe = rng.standard_normal(x.shape)
        lhs = (conv_forward(dx_probe, kernel, np.zeros(4), stride) * dout).sum()
        assert lhs == pytest.approx((dx * dx_probe).sum(), rel=1e-10)
        dk_probe = rng.standard_normal(kernel.shape)
        lhs = (conv_forward(x, dk_probe, np.zeros(4), stride) * dout).sum()
        assert lhs == pytest.approx((dk * dk_probe).sum(), rel=1e-10)
        np.testing.assert_allclose(db, dout.sum(axis=(0, 1, 2)))

    def test_upsample_adjoint(self, rng):
        x = rng.standard_normal((1, 3, 4, 2))
        y = rng.standard_normal((1, 6, 8, 2))
        assert (upsample2(x) * y).sum() == pytest.approx((x * upsample2_backward(y)).sum())


class TestArchitecture:
    def test_full_shape_ladder(self):
        assert ArchConfig.full().encoder_shapes() == FULL_LADDER

    def test_traced_forward_matches_ladder(self):
        params = init_params(0, 256)
        shapes = encode_shapes(params, np.full((1, 256, 256, 3), 0.5, dtype=np.float32))
        assert shapes == FULL_LADDER

    def test_desk_variant_bottleneck(self):
        config = ArchConfig.desk()
        assert config.encoder_shapes()[-1] == (2, 2, 256)
        assert sum(s == 2 for _, s in config.encoder) == 5

    def test_decoder_mirrors_encoder(self):
        specs = list(ArchConfig.full().block_specs())
        decoder = [s for s in specs if s[0].startswith("decoder")]
        assert [s[4] for s in decoder] == [False] + [True] * 7
        assert [s[2] for s in decoder] == [256, 128, 128, 64, 64, 32, 32, 32]

    @pytest.mark.parametrize("size", [100, 192, 0])
    def test_bad_input_size(self, size):
        with pytest.raises(ValueError):
            init_params(0, size)

    def test_skip_path_identity_keeps_shape(self, rng):
        params = init_params(0, config=TINY, dtype=np.float64)
        _, cache = forward(params, rng.random((1, 8, 8, 1)))
        for blk in cache.blocks:
            if f"{blk['name']}.proj.kernel" not in params.tensors:
                assert blk["x"].shape == blk["out_shape"]


class TestParams:
    def test_seed_determinism(self):
        a, b = init_params(0, 64), init_params(0, 64)
        assert list(a.tensors) == list(b.tensors)
        for k in a.tensors:
            np.testing.assert_array_equal(a[k], b[k])

    def test_different_seeds_differ(self):
        a, b = init_params(0, 64), init_params(1, 64)
        assert not np.array_equal(a["encoder.0.conv_a.kernel"], b["encoder.0.conv_a.kernel"])

    def test_zero_biases_zero_mean_kernels(self):
        params = init_params(3, 64)
        for k, v in params.tensors.items():
            if k.endswith("bias"):
                assert not v.any()
        kernel = params["decoder.4.conv_a.kernel"]
        assert abs(kernel.mean()) < 0.1 * kernel.std()


class TestForwardBackward:
    def test_output_shape_and_range(self, rng):
        params = init_params(0, 64)
        x = rng.random((2, 64, 64, 3))
        out, _ = forward(params, x)
        assert out.shape == x.shape
        assert out.min() >= 0 and out.max() <= 1

    def test_pure(self, rng):
        params = init_params(0, config=TINY)
        x = rng.random((3, 8, 8, 1))
        np.testing.assert_array_equal(forward(params, x)[0], forward(params, x)[0])

    def test_reconstruct_equals_forward(self, rng):
        params = init_params(0, config=TINY)
        x = rng.random((8, 8, 1))
        np.testing.assert_array_equal(reconstruct(params, x), forward(params, x[None])[0][0])

    def test_wrong_size_rejected(self, rng):
        with pytest.raises(ValueError):
            forward(init_params(0, config=TINY), rng.random((1, 16, 16, 1)))

    def test_zero_upstream_gradient(self, rng):
        params = init_params(0, config=TINY, dtype=np.float64)
        out, cache = forward(params, rng.random((2, 8, 8, 1)))
        for g in backward(params, cache, np.zeros_like(out)).values():
            assert not g.any()

    def test_homogeneous_in_upstream_gradient(self, rng):
        params = init_params(0, config=TINY, dtype=np.float64)
        out, cache = forward(params, rng.random((2, 8, 8, 1)))
        seed = rng.standard_normal(out.shape)
        g1 = backward(params, cache, seed)
        g2 = backward(params, cache, 2 * seed)
        for k in g1:
            np.testing.assert_array_equal(g2[k], 2 * g1[k])

    def test_gradient_shape_mismatch(self, rng):
        params = init_params(0, config=TINY, dtype=np.float64)
        _, cache = forward(params, rng.random((2, 8, 8, 1)))
        with pytest.raises(ValueError):
            backward(params, cache, np.zeros((1, 8, 8, 1)))

    def test_gradient_keys_match_params(self, rng):
        params = init_params(0, config=TINY, dtype=np.float64)
        out, cache = forward(params, rng.random((1, 8, 8, 1)))
        grads = backward(params, cache, out)
        assert list(grads) == list(params.tensors)
        for k in grads:
            assert grads[k].shape == params[k].shape
