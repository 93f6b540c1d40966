"""Source states, Poisson emission, and joint rotations."""

import math

import numpy as np
import pytest
from scipy import stats

from eraserbench.photon_source import (
    PairEmission,
    SourceKind,
    SourceSpec,
    emission_times,
    emit_pairs,
    joint_hwp_rotation,
    prepare_state,
)
from eraserbench.quantum_state import TwoPhotonState, port_probabilities

ERASURE = math.radians(22.5)


def spec(kind=SourceKind.ENTANGLED, **kw):
    defaults = dict(pair_rate_hz=1000.0, duration_s=5.0, coherence=1.0)
    defaults.update(kw)
    return SourceSpec(kind, **defaults)


class TestPrepareState:
    def test_ideal_entangled_state(self):
        m = prepare_state(spec()).matrix
        expected = np.zeros((4, 4), dtype=complex)
        for i in (0, 3):
            for j in (0, 3):
                expected[i, j] = 0.5
        np.testing.assert_allclose(m, expected, atol=1e-12)

    def test_entangled_phase_offset(self):
        alpha = 0.7
        m = prepare_state(spec(phase_offset_rad=alpha)).matrix
        assert m[0, 3] == pytest.approx(0.5 * np.exp(-1j * alpha), abs=1e-12)

    def test_mixed_hv_matrix(self):
        m = prepare_state(spec(kind=SourceKind.MIXED_HV)).matrix
        np.testing.assert_allclose(m, np.diag([0.5, 0, 0, 0.5]), atol=1e-12)

    def test_mixed_diagonal_matches_projector_sum(self):
        # independent construction: expand the two diagonal-pair projectors
        plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
        minus = np.array([1.0, -1.0]) / math.sqrt(2.0)
        expected = np.zeros((4, 4), dtype=complex)
        for vec in (np.kron(plus, plus), np.kron(minus, minus)):
            expected += 0.5 * np.outer(vec, vec.conj())
        m = prepare_state(spec(kind=SourceKind.MIXED_DIAGONAL)).matrix
        np.testing.assert_allclose(m, expected, atol=1e-12)

    def test_all_kinds_produce_valid_states(self):
        for kind in SourceKind:
            for coherence in (0.0, 0.5, 1.0):
                state = prepare_state(spec(kind=kind, coherence=coherence))
                assert isinstance(state, TwoPhotonState)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SourceSpec(SourceKind.ENTANGLED, pair_rate_hz=0.0)
        with pytest.raises(ValueError):
            SourceSpec(SourceKind.ENTANGLED, duration_s=-1.0)
        with pytest.raises(ValueError):
            SourceSpec(SourceKind.ENTANGLED, coherence=1.5)


class TestEmission:
    def test_same_seed_same_list(self):
        s = spec()
        first = emit_pairs(s, seed=42)
        second = emit_pairs(s, seed=42)
        assert [e.time_ps for e in first] == [e.time_ps for e in second]
        assert all(isinstance(e, PairEmission) for e in first)

    def test_times_strictly_increasing(self):
        times = [e.time_ps for e in emit_pairs(spec(pair_rate_hz=50000.0), seed=3)]
        assert all(b > a for a, b in zip(times, times[1:]))

    def test_count_matches_rate_over_many_seeds(self):
        s = spec(pair_rate_hz=1000.0, duration_s=5.0)
        expected = 5000.0
        bound = 5.0 * math.sqrt(expected)
        for seed in range(100):
            n = len(emit_pairs(s, seed=seed))
            assert abs(n - expected) < bound

    def test_negligible_rate_gives_empty_list(self):
        assert emit_pairs(spec(pair_rate_hz=1e-9, duration_s=1e-3), seed=0) == []

    def test_budget_guard(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            emission_times(1e9, 10.0, rng)

    def test_interarrival_times_are_exponential(self):
        rng = np.random.default_rng(8)
        rate = 20000.0
        times = emission_times(rate, 5.0, rng)
        gaps_s = np.diff(times) * 1e-12
        n = gaps_s.size
        assert n > 90000
        result = stats.kstest(gaps_s, "expon", args=(0, 1.0 / rate))
        critical_1pct = 1.6276 / math.sqrt(n)
        assert result.statistic < critical_1pct


class TestJointRotation:
    def test_entangled_state_statistics_invariant(self):
        state = prepare_state(spec())
        worst = 0.0
        for theta in np.linspace(0, math.radians(30), 7):
            rotated = joint_hwp_rotation(state, theta)
            for signal_angle in (ERASURE, 0.0, 0.1):
                for idler_angle in (ERASURE, 0.0, 0.2):
                    base = port_probabilities(state, signal_angle, idler_angle)
                    rot = port_probabilities(rotated, signal_angle, idler_angle)
                    worst = max(worst, np.max(np.abs(base - rot)))
        assert worst < 1e-10

    def test_rotating_hv_mixture_by_22_5_gives_diagonal_mixture(self):
        hv = prepare_state(spec(kind=SourceKind.MIXED_HV))
        diagonal = prepare_state(spec(kind=SourceKind.MIXED_DIAGONAL))
        rotated = joint_hwp_rotation(hv, ERASURE)
        np.testing.assert_allclose(rotated.matrix, diagonal.matrix, atol=1e-12)

    def test_zero_rotation_fixes_hv_diagonal_states(self):
        hv = prepare_state(spec(kind=SourceKind.MIXED_HV))
        np.testing.assert_allclose(
            joint_hwp_rotation(hv, 0.0).matrix, hv.matrix, atol=1e-12
        )

    def test_hv_mixture_never_interferes(self):
        hv = prepare_state(spec(kind=SourceKind.MIXED_HV))
        from eraserbench.optics import IDENTITY, interferometer_phase
        from eraserbench.quantum_state import apply_local

        for signal_angle in (ERASURE, 0.0, 0.3):
            for idler_angle in (ERASURE, 0.0, 0.9):
                values = []
                for phi in np.linspace(0, 2 * math.pi, 41):
                    state, _ = apply_local(hv, interferometer_phase(phi), IDENTITY)
                    values.append(port_probabilities(state, signal_angle, idler_angle))
                spread = np.max(np.ptp(np.array(values), axis=0))
                assert spread < 1e-10
