"""Coincidence gating: pairing rules, compensation, accidental estimates."""

import math

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from helpers import make_bench

from eraserbench.coincidence import (
    CoincidenceSpec,
    CountTable,
    _greedy_count_py,
    accidental_rate,
    count_pairs,
    count_table,
)
from eraserbench.event_timeline import Detector, run_interval
from eraserbench.photon_source import SourceKind, prepare_state


def arr(*values):
    return np.array(values, dtype=np.int64)


class TestCountPairs:
    def test_inside_window(self):
        assert count_pairs(arr(0), arr(5000), CoincidenceSpec(window_ps=8000)) == 1

    def test_outside_window(self):
        assert count_pairs(arr(0), arr(10000), CoincidenceSpec(window_ps=8000)) == 0

    def test_tie_at_window_counts(self):
        assert count_pairs(arr(0), arr(8000), CoincidenceSpec(window_ps=8000)) == 1

    def test_each_event_pairs_at_most_once(self):
        # two X candidates for one Y: only one pair
        assert count_pairs(arr(0, 100), arr(50), CoincidenceSpec(window_ps=8000)) == 1

    def test_compensation_restores_delayed_pairs(self):
        spec = CoincidenceSpec(window_ps=8000)
        x = arr(0, 100000, 200000)
        y_delayed = x + 20000  # delayed well outside the window
        assert count_pairs(x, y_delayed, spec) == 0
        restored = CoincidenceSpec(
            window_ps=8000, compensation_ps={Detector.A: 20000}
        )
        assert (
            count_pairs(
                y_delayed,
                x,
                restored,
                compensation_x_ps=restored.compensation_ps[Detector.A],
            )
            == 3
        )

    def test_compensation_equals_timestamp_shift(self):
        rng = np.random.default_rng(0)
        x = np.sort(rng.integers(0, 10**9, size=500)).astype(np.int64)
        y = np.sort(rng.integers(0, 10**9, size=500)).astype(np.int64)
        spec = CoincidenceSpec(window_ps=5000)
        delta = 12345
        with_comp = count_pairs(x, y, spec, compensation_x_ps=delta)
        with_shift = count_pairs(x - delta, y, spec)
        assert with_comp == with_shift

    def test_time_translation_invariance(self):
        rng = np.random.default_rng(1)
        x = np.sort(rng.integers(0, 10**8, size=300)).astype(np.int64)
        y = np.sort(rng.integers(0, 10**8, size=300)).astype(np.int64)
        spec = CoincidenceSpec(window_ps=7000)
        base = count_pairs(x, y, spec)
        assert count_pairs(x + 10**7, y + 10**7, spec) == base

    def test_unsorted_input_rejected(self):
        with pytest.raises(ValueError, match="sorted"):
            count_pairs(arr(10, 0), arr(0), CoincidenceSpec(window_ps=100))

    def test_delay_kill_beyond_window(self):
        # true pairs separated by more than the window with zero
        # compensation: nothing but accidentals can survive
        rng = np.random.default_rng(2)
        emission = np.sort(rng.integers(0, 10**12, size=2000)).astype(np.int64)
        spec = CoincidenceSpec(window_ps=8000)
        assert count_pairs(emission, emission + 12000, spec) <= 1

    def test_greedy_matches_maximum_matching_on_small_streams(self):
        rng = np.random.default_rng(3)
        spec = CoincidenceSpec(window_ps=10)
        for _ in range(1000):
            n = int(rng.integers(0, 21))
            m = int(rng.integers(0, 21))
            x = np.sort(rng.integers(0, 60, size=n)).astype(np.int64)
            y = np.sort(rng.integers(0, 60, size=m)).astype(np.int64)
            greedy = count_pairs(x, y, spec)
            if n == 0 or m == 0:
                assert greedy == 0
                continue
            adjacency = (np.abs(x[:, None] - y[None, :]) <= spec.window_ps).astype(np.int8)
            matching = maximum_bipartite_matching(csr_matrix(adjacency), perm_type="column")
            assert greedy == int(np.sum(matching != -1))

    def test_python_fallback_agrees_with_compiled_path(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            x = np.sort(rng.integers(0, 10**6, size=200)).astype(np.int64)
            y = np.sort(rng.integers(0, 10**6, size=180)).astype(np.int64)
            spec = CoincidenceSpec(window_ps=777)
            assert count_pairs(x, y, spec) == _greedy_count_py(x, y, np.int64(777))


class TestCountTable:
    def test_empty_streams_give_zeros(self):
        bench = make_bench(pair_rate_hz=1e-9, dwell_s=0.001)
        state = prepare_state(bench.source)
        streams = run_interval(state, bench, 0.001, seed=5)
        table = count_table(streams, bench.coincidence, 0.001)
        assert table.total_coincidences == 0
        assert table.singles_a == 0

    def test_erasure_zero_phase_concentrates_in_n_ab(self):
        bench = make_bench(coherence=1.0, pair_rate_hz=20000.0, dwell_s=5.0)
        state = prepare_state(bench.source)
        streams = run_interval(state, bench, 5.0, seed=6, delta_phi_rad=0.0)
        t = count_table(streams, bench.coincidence, 5.0)
        total = t.n_ab + t.n_apb
        assert total > 10000
        # accidental-level leakage only in the dark fringe
        assert t.n_ab / total > 1.0 - 4.0 * math.sqrt(0.25 / total)

    def test_which_way_ports_balance(self):
        bench = make_bench(coherence=1.0, pair_rate_hz=20000.0, dwell_s=5.0, idler_hwp_rad=0.0)
        state = prepare_state(bench.source)
        streams = run_interval(state, bench, 5.0, seed=7, delta_phi_rad=1.3)
        t = count_table(streams, bench.coincidence, 5.0)
        n = t.n_ab + t.n_apb
        sigma = math.sqrt(n * 0.25)
        assert abs(t.n_ab - t.n_apb) < 4 * sigma

    def test_invariant_coincidences_bounded_by_singles(self):
        with pytest.raises(ValueError):
            CountTable(
                n_ab=5,
                n_apb=0,
                n_abp=0,
                n_apbp=0,
                singles_a=4,
                singles_ap=0,
                singles_b=10,
                singles_bp=0,
                interval_s=1.0,
            )


class TestAccidentalRate:
    def test_formula_value(self):
        spec = CoincidenceSpec(window_ps=8000)
        assert accidental_rate(1e4, 1e4, spec) == pytest.approx(0.8)

    def test_vanishes_with_window(self):
        spec = CoincidenceSpec(window_ps=1)
        assert accidental_rate(1e4, 1e4, spec) == pytest.approx(1e-4)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            accidental_rate(-1.0, 1.0, CoincidenceSpec(window_ps=100))

    def test_measured_rate_on_independent_streams(self):
        # The symmetric closed-interval pairing sees each partner on
        # either side of the gate, so independent streams measure twice
        # the single-sided estimate.
        rng = np.random.default_rng(8)
        rate = 1e4
        duration = 100.0
        spec = CoincidenceSpec(window_ps=8000)
        x = np.sort(rng.integers(0, int(duration * 1e12), size=rng.poisson(rate * duration)))
        y = np.sort(rng.integers(0, int(duration * 1e12), size=rng.poisson(rate * duration)))
        measured = count_pairs(x.astype(np.int64), y.astype(np.int64), spec) / duration
        predicted = 2.0 * accidental_rate(rate, rate, spec)
        assert measured == pytest.approx(predicted, rel=0.2)
