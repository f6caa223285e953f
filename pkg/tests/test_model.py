"""Tests for the cuboid-attention network, its decoder and checkpoints."""

import math

import numpy as np
import pytest

from stormcast_edl.errors import CheckpointError, ShapeError
from stormcast_edl.model import (
    Checkpoint,
    CuboidAttention,
    NowcastModel,
    load_checkpoint,
    positional_encoding,
    save_checkpoint,
)
from stormcast_edl.numerics import GradTape, Tensor, count_flops, gradient_check, mean


def softmax_rows(scores):
    shifted = np.exp(scores - scores.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def frames(rng, config, batch=2):
    return rng.uniform(0.0, 1.0, size=(batch, config.in_steps, config.frame_h, config.frame_w))


def expected_parameter_count(c) -> int:
    attention = 3 * (c.d_model * c.d_k + c.d_k) + c.d_k * c.d_model + c.d_model
    norms = 4 * c.d_model
    ffn = c.d_model * c.ffn_width + c.ffn_width + c.ffn_width * c.d_model + c.d_model
    decoder = (c.d_model + 1) * c.out_steps * c.out_channels
    return 2 * c.d_model + c.n_blocks * (attention + norms + ffn) + decoder


class TestEmbedding:
    def test_affine_lift_per_cell(self, rng, micro_config):
        model = NowcastModel(micro_config, seed=0)
        x = frames(rng, micro_config)
        embedded = model.embed(x).numpy()
        weight = model.embedding.weight.numpy()[0]
        bias = model.embedding.bias.numpy()
        assert embedded.shape == x.shape + (micro_config.d_model,)
        np.testing.assert_allclose(embedded[1, 2, 3, 4], x[1, 2, 3, 4] * weight + bias)

    def test_unbatched_sequence(self, rng, micro_config):
        model = NowcastModel(micro_config, seed=0)
        x = frames(rng, micro_config, batch=1)
        assert model.embed(x[0]).shape == x.shape[1:] + (micro_config.d_model,)

    def test_positional_encoding_values(self):
        table = positional_encoding(3, 2, 2, 4).numpy()
        assert table.shape == (3, 2, 2, 4)
        np.testing.assert_allclose(
            table[1, 0, 1], [math.sin(1.0), math.cos(1.0), math.sin(0.01), math.cos(0.01)]
        )
        np.testing.assert_allclose(table[0, 1, 0], [0.0, 1.0, 0.0, 1.0])

    def test_odd_width_rejected(self):
        with pytest.raises(ShapeError):
            positional_encoding(3, 2, 2, 5)


class TestCuboidAttention:
    @pytest.mark.parametrize("axis", ["T", "H", "W"])
    def test_matches_per_line_oracle(self, rng, axis):
        layer = CuboidAttention(6, 3, rng)
        h = Tensor(rng.normal(size=(2, 3, 4, 5, 6)))
        q, k, v = (t.numpy() for t in layer.project(h))
        index = {"T": 1, "H": 2, "W": 3}[axis]

        qm, km, vm = (np.moveaxis(t, index, -2) for t in (q, k, v))
        weights = softmax_rows(qm @ np.swapaxes(km, -1, -2) / math.sqrt(3))
        expected = np.moveaxis(weights @ vm, -2, index)

        np.testing.assert_allclose(layer.axis_attention(h, axis).numpy(), expected, atol=1e-12)

    @pytest.mark.parametrize("axis", ["T", "H", "W"])
    def test_equivariant_to_permutations(self, rng, axis):
        layer = CuboidAttention(6, 3, rng)
        h = rng.normal(size=(3, 4, 5, 2, 6))
        out = layer.axis_attention(Tensor(h), axis).numpy()
        assert out.shape == h.shape
        for dim in range(4):
            order = rng.permutation(h.shape[dim])
            permuted = layer.axis_attention(Tensor(np.take(h, order, axis=dim)), axis).numpy()
            np.testing.assert_allclose(permuted, np.take(out, order, axis=dim), atol=1e-12)

    def test_windowed_axis(self, rng):
        layer = CuboidAttention(4, 2, rng, axis_window=2)
        h = Tensor(rng.normal(size=(1, 2, 3, 4, 4)))
        q, k, v = (t.numpy() for t in layer.project(h))
        out = layer.axis_attention(h, "W").numpy()
        for start in (0, 2):
            span = slice(start, start + 2)
            weights = softmax_rows(
                q[:, :, :, span] @ np.swapaxes(k[:, :, :, span], -1, -2) / math.sqrt(2)
            )
            np.testing.assert_allclose(out[:, :, :, span], weights @ v[:, :, :, span], atol=1e-12)

    def test_window_must_divide_extent(self, rng):
        layer = CuboidAttention(4, 2, rng, axis_window=3)
        with pytest.raises(ShapeError):
            layer.axis_attention(Tensor(rng.normal(size=(1, 2, 4, 4, 4))), "H")

    def test_unknown_axis(self, rng):
        layer = CuboidAttention(4, 2, rng)
        with pytest.raises(ShapeError):
            layer.axis_attention(Tensor(rng.normal(size=(1, 2, 2, 2, 4))), "Z")

    def test_output_averages_axes(self, rng):
        layer = CuboidAttention(4, 2, rng)
        h = Tensor(rng.normal(size=(1, 2, 3, 3, 4)))
        average = sum(layer.axis_attention(h, axis).numpy() for axis in "THW") / 3.0
        expected = average @ layer.output.weight.numpy() + layer.output.bias.numpy()
        np.testing.assert_allclose(layer(h).numpy(), expected, atol=1e-12)


class TestBlock:
    def test_sublayers_are_layer_normalized(self, rng, micro_config):
        model = NowcastModel(micro_config, seed=0)
        h = model.encode_input(Tensor(frames(rng, micro_config)))
        state = model.trace_block(h)
        for activation in (state.residual, state.output):
            values = activation.numpy()
            np.testing.assert_allclose(values.mean(axis=-1), 0.0, atol=1e-9)
            np.testing.assert_allclose(values.var(axis=-1), 1.0, atol=1e-6)
        np.testing.assert_allclose(
            state.residual.numpy(),
            model.blocks[0].attention_norm(Tensor(h.numpy() + state.attention.numpy())).numpy(),
        )
        np.testing.assert_array_equal(model.cuboid_block(h).numpy(), state.output.numpy())


class TestDecoder:
    def test_shapes(self, rng, micro_config):
        x = frames(rng, micro_config)
        deterministic = NowcastModel(micro_config, seed=0)
        evidential = NowcastModel(micro_config.with_head("evidential"), seed=0)
        lead = micro_config.out_steps
        assert deterministic(x).shape == (2, lead, 8, 8)
        assert evidential(x).shape == (2, 4, lead, 8, 8)
        assert evidential(x[0]).shape == (4, lead, 8, 8)
        assert evidential.evidential_params(x).shape == (2, lead, 8, 8)

    def test_column_layout(self, rng, micro_config):
        model = NowcastModel(micro_config.with_head("evidential"), seed=0)
        projection = model.decoder.projection
        width = projection.bias.shape[0]
        projection.weight.assign(np.zeros(projection.weight.shape))
        projection.bias.assign(np.arange(width, dtype=np.float64))
        out = model(frames(rng, micro_config)).numpy()
        for lead in range(micro_config.out_steps):
            for channel in range(4):
                assert np.all(out[:, channel, lead] == lead * 4 + channel)

    def test_point_forecast_is_clamped(self, rng, micro_config):
        model = NowcastModel(micro_config, seed=0)
        model.decoder.projection.bias.assign(np.full(micro_config.out_steps, 5.0))
        forecast = model.point_forecast(frames(rng, micro_config))
        assert forecast.max() <= 1.0 and forecast.min() >= 0.0

    def test_wrong_input_shape(self, micro_config):
        model = NowcastModel(micro_config, seed=0)
        with pytest.raises(ShapeError):
            model(np.zeros((2, micro_config.in_steps + 1, 8, 8)))

    def test_evidential_params_need_evidential_head(self, rng, micro_config):
        with pytest.raises(ShapeError):
            NowcastModel(micro_config, seed=0).evidential_params(frames(rng, micro_config))


class TestModel:
    def test_parameter_count(self, micro_config):
        for config in (micro_config, micro_config.with_head("evidential")):
            assert NowcastModel(config).parameter_count() == expected_parameter_count(config)

    def test_same_seed_same_model(self, rng, micro_config):
        x = frames(rng, micro_config)
        first = NowcastModel(micro_config, seed=7)(x).numpy()
        np.testing.assert_array_equal(first, NowcastModel(micro_config, seed=7)(x).numpy())
        assert not np.allclose(first, NowcastModel(micro_config, seed=8)(x).numpy())

    def test_dropout_only_when_active(self, rng, micro_config):
        model = NowcastModel(micro_config.model_copy(update={"dropout_rate": 0.5}), seed=0)
        x = frames(rng, micro_config)
        np.testing.assert_array_equal(model(x).numpy(), model(x).numpy())
        first = model(x, dropout_active=True, rng=np.random.default_rng(1)).numpy()
        again = model(x, dropout_active=True, rng=np.random.default_rng(1)).numpy()
        other = model(x, dropout_active=True, rng=np.random.default_rng(2)).numpy()
        np.testing.assert_array_equal(first, again)
        assert not np.allclose(first, other)

    def test_end_to_end_gradients(self, rng, micro_config):
        model = NowcastModel(micro_config.with_head("evidential"), seed=0)
        x = frames(rng, micro_config, batch=1)
        fn = lambda: mean(model(x) ** 2)  # noqa: E731
        error = gradient_check(
            fn, model.parameters(), max_entries_per_param=3, rng=np.random.default_rng(0)
        )
        assert error < 1e-4

    def test_every_parameter_receives_gradient(self, rng, micro_config):
        model = NowcastModel(micro_config.with_head("evidential"), seed=0)
        x = frames(rng, micro_config)
        target = rng.uniform(0.0, 1.0, size=model(x).shape)
        with GradTape() as tape:
            loss = mean((model(x) - target) ** 2)
        grads = tape.backward(loss)
        assert set(grads) == set(model.parameters())
        for name, param in model.named_parameters():
            # softmax over keys cancels any shift the key bias adds
            if name.endswith("attention.key.bias"):
                continue
            assert np.any(grads[param] != 0.0), name

    def test_flop_count_is_deterministic(self, rng, micro_config):
        model = NowcastModel(micro_config.with_head("evidential"), seed=0)
        x = frames(rng, micro_config)
        counts = []
        for _ in range(2):
            with count_flops() as counter:
                model(x)
            counts.append(counter.snapshot())
        assert counts[0] == counts[1]
        assert counts[0]["total"] > 0
        with count_flops() as other:
            model(frames(rng, micro_config))
        assert other.total == counts[0]["total"]

    def test_block_preserves_shape(self, rng, micro_config):
        model = NowcastModel(micro_config, seed=0)
        h = model.encode_input(Tensor(frames(rng, micro_config)))
        assert model.cuboid_block(h).shape == h.shape


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng, micro_config):
        model = NowcastModel(micro_config.with_head("evidential"), seed=3)
        checkpoint = Checkpoint.from_model(model, step=12, variant="edl")
        path = save_checkpoint(checkpoint, tmp_path / "m.npz")
        restored = load_checkpoint(path)
        assert restored.step == 12
        assert restored.variant == "edl"
        assert restored.config == model.config
        x = frames(rng, micro_config)
        np.testing.assert_array_equal(restored.to_model()(x).numpy(), model(x).numpy())

    def test_missing_and_corrupt_files(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.npz")
        corrupt = tmp_path / "corrupt.npz"
        corrupt.write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(corrupt)

    def test_strict_state_loading(self, micro_config):
        model = NowcastModel(micro_config, seed=0)
        state = model.state_dict()
        state.pop("embedding.weight")
        with pytest.raises(CheckpointError):
            model.load_state_dict(state)
        model.load_state_dict(state, strict=False)

    def test_shape_mismatch(self, micro_config):
        model = NowcastModel(micro_config, seed=0)
        other = NowcastModel(micro_config.with_head("evidential"), seed=0)
        with pytest.raises(CheckpointError):
            model.load_state_dict(other.state_dict())
