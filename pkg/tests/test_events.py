"""Event model, synthetic sources, and CSV round-trip tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asap_stream import (DAVIS346, ArraySource, ConfigurationError,
                         EventFileError, OrderingError, SensorGeometry,
                         generate_constant_stream, generate_ramp_stream,
                         make_events, read_event_file, read_events,
                         write_event_file)


class TestGeometry:
    def test_default_is_346_by_260(self):
        assert DAVIS346.width == 346
        assert DAVIS346.height == 260

    def test_degenerate_rejected(self):
        with pytest.raises(ConfigurationError):
            SensorGeometry(width=0, height=10)


class TestConstantStream:
    def test_count_within_poisson_bounds(self):
        # rate * duration = 1e6; +/- 4 sigma = +/- 4000
        events = generate_constant_stream(1e6, 1.0, seed=42).events()
        assert 1_000_000 - 4000 <= len(events) <= 1_000_000 + 4000

    def test_same_seed_bit_identical(self):
        a = generate_constant_stream(1e6, 1.0, seed=7).events()
        b = generate_constant_stream(1e6, 1.0, seed=7).events()
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = generate_constant_stream(1e5, 0.1, seed=1).events()
        b = generate_constant_stream(1e5, 0.1, seed=2).events()
        assert not np.array_equal(a, b)

    def test_fields_within_default_geometry(self):
        ev = generate_constant_stream(1e5, 0.1, seed=3).events()
        assert np.all(ev["x"] >= 0) and np.all(ev["x"] < 346)
        assert np.all(ev["y"] >= 0) and np.all(ev["y"] < 260)
        assert np.all(np.isin(ev["p"], (-1, 1)))

    def test_timestamps_non_decreasing(self):
        ev = generate_constant_stream(1e6, 0.2, seed=5).events()
        assert np.all(np.diff(ev["t"]) >= 0)

    def test_mean_count_over_seeds_within_1pct(self):
        rate, duration = 1e5, 0.1
        counts = [len(generate_constant_stream(rate, duration, seed=s).events())
                  for s in range(100)]
        assert abs(np.mean(counts) - rate * duration) <= 0.01 * rate * duration

    @pytest.mark.parametrize("rate,duration", [(0, 1.0), (-1, 1.0), (1e6, 0)])
    def test_invalid_parameters(self, rate, duration):
        with pytest.raises(ConfigurationError):
            generate_constant_stream(rate, duration)


class TestRampStream:
    def test_count_matches_rate_integral(self):
        # integral of the linear rate from 1e5 to 1e7 over 5 s = 2.525e7
        events = generate_ramp_stream(1e5, 1e7, 5.0, seed=11).events()
        expected = 2.525e7
        sigma = np.sqrt(expected)
        assert abs(len(events) - expected) <= 4 * sigma

    def test_flat_ramp_count_distribution_matches_constant(self):
        # degenerate ramp: same Poisson count statistics as a constant source
        rate, duration = 1e5, 0.1
        ramp = [len(generate_ramp_stream(rate, rate, duration, seed=s).events())
                for s in range(20)]
        const = [len(generate_constant_stream(rate, duration, seed=s).events())
                 for s in range(20)]
        expected = rate * duration
        assert abs(np.mean(ramp) - expected) < 4 * np.sqrt(expected / 20)
        assert abs(np.mean(ramp) - np.mean(const)) < 4 * np.sqrt(expected / 10)

    def test_timestamps_sorted(self):
        ev = generate_ramp_stream(1e4, 1e6, 0.5, seed=13).events()
        assert np.all(np.diff(ev["t"]) >= 0)

    def test_deterministic(self):
        a = generate_ramp_stream(1e5, 1e6, 0.5, seed=17).events()
        b = generate_ramp_stream(1e5, 1e6, 0.5, seed=17).events()
        assert np.array_equal(a, b)

    def test_invalid_rates(self):
        with pytest.raises(ConfigurationError):
            generate_ramp_stream(0, 1e6, 1.0)
        with pytest.raises(ConfigurationError):
            generate_ramp_stream(1e6, -1, 1.0)


@settings(max_examples=25, deadline=None)
@given(rate=st.floats(min_value=1e3, max_value=1e6),
       seed=st.integers(min_value=0, max_value=2**31))
def test_any_generated_stream_is_sorted(rate, seed):
    ev = generate_constant_stream(rate, 0.01, seed=seed).events()
    assert np.all(np.diff(ev["t"]) >= 0)


class TestEventFile:
    def test_single_line_parses(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("1500,10,20,1\n")
        ev = read_events(path)
        assert len(ev) == 1
        assert (ev["t"][0], ev["x"][0], ev["y"][0], ev["p"][0]) == (1500, 10, 20, 1)

    def test_header_is_optional(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("t_us,x,y,p\n1500,10,20,1\n")
        assert len(read_events(path)) == 1

    def test_empty_file_gives_exhausted_source(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        source = read_event_file(path)
        assert len(source.events()) == 0

    def test_round_trip_identity(self, tmp_path):
        ev = generate_constant_stream(1e5, 0.02, seed=9).events()
        path = tmp_path / "rt.csv"
        write_event_file(path, ev)
        back = read_events(path)
        assert np.array_equal(ev, back)

    def test_write_read_write_byte_equal(self, tmp_path):
        ev = generate_constant_stream(1e5, 0.01, seed=4).events()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_event_file(p1, ev)
        write_event_file(p2, read_events(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_boundary_field_values_round_trip(self, tmp_path):
        ev = make_events([0, 5], [345, 0], [259, 0], [-1, 1])
        path = tmp_path / "edge.csv"
        write_event_file(path, ev)
        assert np.array_equal(read_events(path), ev)

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("100,1,2,1\nnot-a-line\n")
        with pytest.raises(EventFileError, match=":2"):
            read_events(path)

    def test_bad_polarity_rejected(self, tmp_path):
        path = tmp_path / "pol.csv"
        path.write_text("100,1,2,0\n")
        with pytest.raises(EventFileError, match="polarity"):
            read_events(path)

    def test_decreasing_timestamps_rejected(self, tmp_path):
        path = tmp_path / "order.csv"
        path.write_text("100,1,2,1\n50,1,2,1\n")
        with pytest.raises(OrderingError, match=":2"):
            read_events(path)


class TestArraySource:
    def test_chunked_iteration_preserves_stream(self):
        ev = generate_constant_stream(1e5, 0.05, seed=2).events()
        src = ArraySource(ev, chunk_size=100)
        chunks = list(src.chunks())
        assert all(len(c) <= 100 for c in chunks)
        assert np.array_equal(np.concatenate(chunks), ev)

    def test_rejects_unordered_events(self):
        ev = make_events([10, 5], [0, 0], [0, 0], [1, 1])
        with pytest.raises(OrderingError):
            ArraySource(ev)
