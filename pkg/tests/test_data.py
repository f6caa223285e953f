"""Tests for synthetic storms, raw file ingestion, windowing and splitting."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stormcast_edl.data import (
    FrameSequence,
    NowcastSample,
    StormCell,
    SyntheticStormConfig,
    export,
    fingerprint,
    generate,
    ingest,
    render_event,
    split_events,
    stack_samples,
    window,
)
from stormcast_edl.errors import DataError, IngestionError

HEADER = b"EVST1 1 2 2 2 255\n"


def centroid_col(frame):
    return float((frame.sum(axis=0) * np.arange(frame.shape[1])).sum() / frame.sum())


def sequence(n_frames, value=0.5, event_id=0):
    return FrameSequence(frames=np.full((n_frames, 4, 4), value), event_id=event_id)


class TestSynthetic:
    def test_frames_are_normalized(self, tiny_events):
        for event in tiny_events:
            assert event.frames.shape == (7, 8, 8)
            assert 0.0 <= event.frames.min() and event.frames.max() <= 1.0
        assert [event.event_id for event in tiny_events] == list(range(12))

    def test_static_field_without_motion_growth_or_noise(self):
        config = SyntheticStormConfig(
            n_events=3,
            n_frames=5,
            height=16,
            width=16,
            speed_range=(0.0, 0.0),
            growth_range=(1.0, 1.0),
            noise_amplitude=0.0,
        )
        for event in generate(config):
            assert np.all(event.frames == event.frames[0])

    def test_cell_advects_one_pixel_per_step(self):
        config = SyntheticStormConfig(n_frames=5, height=32, width=32)
        cell = StormCell(
            row=16.0,
            col=10.0,
            velocity_row=0.0,
            velocity_col=1.0,
            sigma=1.5,
            amplitude=0.5,
            growth=1.0,
        )
        frames = render_event([cell], config)
        centroids = [centroid_col(frame) for frame in frames]
        np.testing.assert_allclose(np.diff(centroids), 1.0, atol=1e-6)

    def test_growth_scales_peak_around_middle_frame(self):
        config = SyntheticStormConfig(n_frames=5, height=32, width=32)
        cell = StormCell(
            row=16.0,
            col=16.0,
            velocity_row=0.0,
            velocity_col=0.0,
            sigma=2.0,
            amplitude=0.5,
            growth=1.1,
        )
        peaks = render_event([cell], config).max(axis=(1, 2))
        np.testing.assert_allclose(peaks, 0.5 * 1.1 ** (np.arange(5) - 2.0))

    @given(
        seed=st.integers(0, 10_000),
        noise=st.sampled_from([0.0, 0.02, 0.1]),
        growth=st.sampled_from([(1.0, 1.0), (0.97, 1.03), (0.8, 1.25)]),
    )
    @settings(max_examples=40, deadline=None)
    def test_mass_drift_is_bounded(self, seed, noise, growth):
        config = SyntheticStormConfig(
            n_events=3,
            n_frames=9,
            height=12,
            width=12,
            growth_range=growth,
            noise_amplitude=noise,
            seed=seed,
        )
        for event in generate(config):
            mass = event.frames.sum(axis=(1, 2))
            for before, after in zip(mass[:-1], mass[1:]):
                assert abs(after - before) <= config.max_mass_change(before) + 1e-6 * before

    def test_mass_is_kept_at_the_edges(self):
        config = SyntheticStormConfig(n_events=20, noise_amplitude=0.0, seed=1)
        for event in generate(config):
            mass = event.frames.sum(axis=(1, 2))
            bounds = np.array([config.max_mass_change(m) for m in mass[:-1]])
            assert np.all(np.abs(np.diff(mass)) <= bounds + 1e-6 * mass[:-1])

    def test_constant_mass_when_cell_leaves_the_grid(self):
        config = SyntheticStormConfig(n_frames=12, height=16, width=16)
        cell = StormCell(
            row=8.0,
            col=12.0,
            velocity_row=0.0,
            velocity_col=1.3,
            sigma=2.0,
            amplitude=0.6,
            growth=1.0,
        )
        mass = render_event([cell], config).sum(axis=(1, 2))
        np.testing.assert_allclose(mass, mass[0], rtol=1e-9)

    def test_growing_event_is_rescaled_not_clipped(self):
        config = SyntheticStormConfig(n_frames=13, height=24, width=24, noise_amplitude=0.0)
        cell = StormCell(
            row=12.0,
            col=12.0,
            velocity_row=0.0,
            velocity_col=0.0,
            sigma=2.0,
            amplitude=0.9,
            growth=1.03,
        )
        frames = render_event([cell], config)
        assert frames.max() == pytest.approx(1.0)
        mass = frames.sum(axis=(1, 2))
        np.testing.assert_allclose(mass[1:] / mass[:-1], 1.03, rtol=1e-9)

    def test_same_seed_same_events(self, tiny_synthetic):
        first, again = generate(tiny_synthetic), generate(tiny_synthetic)
        for a, b in zip(first, again):
            np.testing.assert_array_equal(a.frames, b.frames)
        other = generate(tiny_synthetic.model_copy(update={"seed": 4}))
        assert not np.array_equal(first[0].frames, other[0].frames)

    def test_events_do_not_depend_on_event_count(self, tiny_synthetic):
        fewer = generate(tiny_synthetic.model_copy(update={"n_events": 3}))
        for a, b in zip(fewer, generate(tiny_synthetic)):
            np.testing.assert_array_equal(a.frames, b.frames)

    def test_speed_scale(self, tiny_synthetic):
        assert tiny_synthetic.with_speed_scale(3.0).speed_range == (1.5, 4.5)
        with pytest.raises(ValueError):
            tiny_synthetic.with_speed_scale(0.0)

    def test_invalid_ranges(self):
        with pytest.raises(ValueError):
            SyntheticStormConfig(speed_range=(2.0, 1.0))
        with pytest.raises(ValueError):
            SyntheticStormConfig(growth_range=(0.0, 1.0))


class TestFrameSequence:
    @pytest.mark.parametrize(
        "frames",
        [np.full((2, 3, 3), 1.5), np.full((3, 3), 0.5), np.full((2, 3, 3), np.nan)],
    )
    def test_rejects_invalid_frames(self, frames):
        with pytest.raises(DataError):
            FrameSequence(frames=frames)

    def test_frames_are_read_only(self):
        with pytest.raises(ValueError):
            sequence(3).frames[0, 0, 0] = 0.1

    def test_sample_alignment(self):
        with pytest.raises(DataError):
            NowcastSample(history=sequence(3, event_id=0), target=sequence(2, event_id=1))


class TestWindows:
    @pytest.mark.parametrize(
        "n_frames, stride, expected", [(7, 1, 1), (10, 1, 4), (10, 2, 2), (10, 3, 2)]
    )
    def test_window_counts(self, n_frames, stride, expected):
        assert len(window([sequence(n_frames)], 4, 3, stride)) == expected

    def test_target_follows_history(self):
        frames = np.linspace(0.0, 1.0, 10)[:, None, None] * np.ones((10, 4, 4))
        event = FrameSequence(frames=frames, event_id=5)
        samples = window([event], 4, 3, stride=2)
        assert [s.start_frame for s in samples] == [0, 2]
        np.testing.assert_array_equal(samples[1].history.frames, frames[2:6])
        np.testing.assert_array_equal(samples[1].target.frames, frames[6:9])
        assert samples[1].target.event_id == 5

    def test_short_events_are_skipped(self, caplog):
        with caplog.at_level(logging.WARNING):
            samples = window([sequence(6), sequence(7, event_id=1)], 4, 3)
        assert len(samples) == 1
        assert "Skipped 1 events" in caplog.text

    def test_invalid_arguments(self):
        with pytest.raises(DataError):
            window([sequence(7)], 4, 3, stride=0)
        with pytest.raises(DataError):
            stack_samples([])

    def test_stack_shapes(self, tiny_events):
        x, y = stack_samples(window(tiny_events, 4, 3))
        assert x.shape == (12, 4, 8, 8)
        assert y.shape == (12, 3, 8, 8)


class TestSplits:
    def test_disjoint_and_sized(self, tiny_events):
        splits = split_events(tiny_events, (0.5, 0.25, 0.25), seed=0)
        ids = [{e.event_id for e in splits.split(name)} for name in ("train", "validation", "test")]
        assert [len(s) for s in ids] == [6, 3, 3]
        assert ids[0] | ids[1] | ids[2] == set(range(12))
        assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])

    def test_seeded(self, tiny_events):
        first = split_events(tiny_events, seed=1)
        again = split_events(tiny_events, seed=1)
        assert [e.event_id for e in first.test] == [e.event_id for e in again.test]
        assert fingerprint(first.test) == fingerprint(again.test)

    def test_small_split_sets_get_one_event(self, tiny_events):
        splits = split_events(tiny_events[:3], (0.9, 0.05, 0.05))
        assert (len(splits.train), len(splits.validation), len(splits.test)) == (1, 1, 1)

    def test_invalid(self, tiny_events):
        with pytest.raises(DataError):
            split_events(tiny_events[:2])
        with pytest.raises(DataError):
            split_events(tiny_events, (0.5, 0.5, 0.5))

    def test_fingerprint_tracks_content(self):
        assert fingerprint([sequence(3, 0.5)]) != fingerprint([sequence(3, 0.6)])


class TestRawFiles:
    def test_export_then_ingest_quantizes(self, tmp_path, tiny_events):
        path = export(tiny_events, tmp_path / "frames.evst")
        restored = ingest(path)
        assert len(restored) == len(tiny_events)
        for original, loaded in zip(tiny_events, restored):
            np.testing.assert_array_equal(loaded.frames, np.rint(original.frames * 255) / 255)

    def test_valid_file(self, tmp_path):
        path = tmp_path / "ok.evst"
        path.write_bytes(HEADER + np.arange(8, dtype="<u2").tobytes())
        (event,) = ingest(path)
        np.testing.assert_allclose(event.frames.reshape(-1), np.arange(8) / 255)

    @pytest.mark.parametrize(
        "blob, offset",
        [
            (b"EVSX1 1 2 2 2 255\n" + bytes(16), 0),
            (b"EVST1 1 x 2 2 255\n" + bytes(16), 8),
            (HEADER + bytes(14), len(HEADER) + 14),
            (HEADER + np.array([0, 0, 0, 300, 0, 0, 0, 0], dtype="<u2").tobytes(), len(HEADER) + 6),
            (b"EVST1 1 2 2 2 255" + bytes(16), 0),
        ],
    )
    def test_errors_report_byte_offsets(self, tmp_path, blob, offset):
        path = tmp_path / "bad.evst"
        path.write_bytes(blob)
        with pytest.raises(IngestionError) as info:
            ingest(path)
        assert info.value.byte_offset == offset

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            ingest(tmp_path / "absent.evst")

    def test_export_needs_uniform_events(self, tmp_path):
        with pytest.raises(DataError):
            export([sequence(3), sequence(4)], tmp_path / "x.evst")
