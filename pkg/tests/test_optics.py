"""Jones operators: wave plates, ports, mirrors, actuator calibration."""

import math

import numpy as np
import pytest

from eraserbench.optics import (
    ActuatorCalibration,
    BlockPath,
    DEFAULT_CALIBRATION,
    IDENTITY,
    MeasurementSetting,
    OperatorKind,
    PolarizationOperator,
    Port,
    actuator_to_phase,
    analyzer_projector,
    beam_block,
    half_wave_plate,
    interferometer_phase,
    mirror,
    pbs_projector,
)
from eraserbench.quantum_state import apply_local, dephase, from_pure, joint_probability

H = np.array([1.0, 0.0])
V = np.array([0.0, 1.0])
PLUS45 = np.array([1.0, 1.0]) / math.sqrt(2.0)
MINUS45 = np.array([1.0, -1.0]) / math.sqrt(2.0)

ERASURE = math.radians(22.5)
T = Port.TRANSMITTED
R = Port.REFLECTED


def ket_probability(op: PolarizationOperator, ket: np.ndarray) -> float:
    return float(np.real(ket.conj() @ op.matrix @ ket))


class TestHalfWavePlate:
    def test_22_5_maps_h_to_plus45(self):
        out = half_wave_plate(ERASURE).matrix @ H
        np.testing.assert_allclose(out, PLUS45, atol=1e-12)

    def test_zero_is_hv_diagonal(self):
        np.testing.assert_allclose(
            half_wave_plate(0.0).matrix, np.diag([1.0, -1.0]), atol=1e-12
        )

    def test_45_swaps_h_and_v(self):
        u = half_wave_plate(math.radians(45)).matrix
        np.testing.assert_allclose(u @ H, V, atol=1e-12)
        np.testing.assert_allclose(u @ V, H, atol=1e-12)

    def test_unitary_hermitian_involution(self):
        rng = np.random.default_rng(2)
        for theta in rng.uniform(0, math.pi, size=25):
            u = half_wave_plate(theta).matrix
            np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-10)
            np.testing.assert_allclose(u, u.conj().T, atol=1e-10)
            np.testing.assert_allclose(u @ u, np.eye(2), atol=1e-10)

    def test_nonfinite_angle_rejected(self):
        with pytest.raises(ValueError):
            half_wave_plate(math.inf)


class TestInterferometerPhase:
    def test_zero_phase_is_identity(self):
        np.testing.assert_allclose(interferometer_phase(0.0).matrix, np.eye(2), atol=1e-12)

    def test_diagonal_probabilities_after_phase(self):
        for phi in np.linspace(0, 2 * math.pi, 21):
            out = interferometer_phase(phi).matrix @ PLUS45
            p_plus = abs(PLUS45.conj() @ out) ** 2
            p_minus = abs(MINUS45.conj() @ out) ** 2
            assert p_plus == pytest.approx(math.cos(phi / 2) ** 2, abs=1e-12)
            assert p_minus == pytest.approx(math.sin(phi / 2) ** 2, abs=1e-12)

    def test_half_period_flips_diagonal_state(self):
        out = interferometer_phase(math.pi).matrix @ PLUS45
        # equal up to global phase: compare projectors
        np.testing.assert_allclose(
            np.outer(out, out.conj()), np.outer(MINUS45, MINUS45), atol=1e-12
        )


class TestPbsAndAnalyzer:
    def test_transmitted_passes_v(self):
        assert ket_probability(pbs_projector(T), V) == pytest.approx(1.0)
        assert ket_probability(pbs_projector(T), H) == pytest.approx(0.0)
        assert ket_probability(pbs_projector(T), PLUS45) == pytest.approx(0.5)

    def test_analyzer_ports_resolve_diagonal_basis(self):
        # With transmitted = V, the 22.5 deg analyzer transmits -45 and
        # reflects +45 polarized light.
        assert ket_probability(analyzer_projector(MeasurementSetting(ERASURE, T)), MINUS45) == pytest.approx(1.0, abs=1e-12)
        assert ket_probability(analyzer_projector(MeasurementSetting(ERASURE, R)), PLUS45) == pytest.approx(1.0, abs=1e-12)
        assert ket_probability(analyzer_projector(MeasurementSetting(0.0, R)), H) == pytest.approx(1.0, abs=1e-12)

    def test_port_pair_sums_to_identity(self):
        rng = np.random.default_rng(4)
        for theta in rng.uniform(0, math.pi, size=20):
            total = (
                analyzer_projector(MeasurementSetting(theta, T)).matrix
                + analyzer_projector(MeasurementSetting(theta, R)).matrix
            )
            np.testing.assert_allclose(total, np.eye(2), atol=1e-10)

    def test_projector_kind_validates(self):
        rng = np.random.default_rng(6)
        for theta in rng.uniform(0, math.pi, size=10):
            p = analyzer_projector(MeasurementSetting(theta, T)).matrix
            np.testing.assert_allclose(p @ p, p, atol=1e-10)
            np.testing.assert_allclose(p, p.conj().T, atol=1e-10)

    def test_overshoot_rotates_analysis_basis_by_twice_epsilon(self):
        def transmitted_axis(theta):
            u = half_wave_plate(theta).matrix
            return u.conj().T @ V

        for eps_deg in (0.5, 1.0, 2.0):
            eps = math.radians(eps_deg)
            overlap = abs(
                transmitted_axis(ERASURE + eps).conj() @ transmitted_axis(ERASURE)
            ) ** 2
            assert overlap == pytest.approx(math.cos(2 * eps) ** 2, abs=1e-12)

    def test_setting_angle_normalized(self):
        s = MeasurementSetting(math.pi + 0.25, T)
        assert s.hwp_angle_rad == pytest.approx(0.25)


class TestMirror:
    def test_zero_shift_is_identity(self):
        np.testing.assert_allclose(mirror(0.0).matrix, np.eye(2), atol=1e-12)

    def test_four_mirrors_compose_to_four_delta(self):
        delta = 0.05
        product = np.eye(2, dtype=complex)
        for _ in range(4):
            product = mirror(delta).matrix @ product
        np.testing.assert_allclose(product, mirror(4 * delta).matrix, atol=1e-12)

    def test_mirror_shifts_fringe_phase_without_changing_visibility(self):
        # Diagonal idler phases slide the erasure fringe but cannot
        # change its contrast.
        bell = dephase(from_pure(np.array([1, 0, 0, 1]) / math.sqrt(2)), 0.8)
        total_delta = 0.2
        grid = np.linspace(0, 2 * math.pi, 201)

        def fringe(phi, with_mirrors):
            state, _ = apply_local(bell, interferometer_phase(phi), IDENTITY)
            if with_mirrors:
                state, _ = apply_local(state, IDENTITY, mirror(total_delta))
            return joint_probability(
                state, MeasurementSetting(ERASURE, T), MeasurementSetting(ERASURE, T)
            )

        plain = np.array([fringe(phi, False) for phi in grid])
        shifted = np.array([fringe(phi + total_delta, False) for phi in grid])
        mirrored = np.array([fringe(phi, True) for phi in grid])
        # exact functional identity: the mirror is a pure fringe translation
        np.testing.assert_allclose(mirrored, shifted, atol=1e-12)
        # same contrast when both fringes are sampled at their extrema
        mirrored_at_extrema = np.array([fringe(phi - total_delta, True) for phi in grid])
        vis_plain = (plain.max() - plain.min()) / (plain.max() + plain.min())
        vis_mirror = (mirrored_at_extrema.max() - mirrored_at_extrema.min()) / (
            mirrored_at_extrema.max() + mirrored_at_extrema.min()
        )
        assert vis_mirror == pytest.approx(vis_plain, abs=1e-12)


class TestBeamBlock:
    def test_survival_probabilities(self):
        block = beam_block(BlockPath.V_PATH)
        assert ket_probability(block, H) == pytest.approx(1.0)
        assert ket_probability(block, V) == pytest.approx(0.0)
        assert ket_probability(beam_block(BlockPath.H_PATH), V) == pytest.approx(1.0)


class TestActuator:
    def test_origin(self):
        assert actuator_to_phase(0.0, ActuatorCalibration(1.0)) == 0.0

    def test_default_calibration_full_fringe_at_4_4_um(self):
        assert actuator_to_phase(4.4, DEFAULT_CALIBRATION) == pytest.approx(2 * math.pi)
        assert actuator_to_phase(2.2, DEFAULT_CALIBRATION) == pytest.approx(math.pi)

    def test_linearity_with_offset(self):
        cal = ActuatorCalibration(radians_per_micron=0.5, origin_offset_rad=1.0)
        assert actuator_to_phase(3.0, cal) == pytest.approx(2.5)

    def test_invalid_calibration_rejected(self):
        with pytest.raises(ValueError):
            ActuatorCalibration(radians_per_micron=0.0)


class TestOperatorValidation:
    def test_unitary_kind_rejects_nonunitary(self):
        with pytest.raises(ValueError):
            PolarizationOperator(np.array([[1.0, 0.0], [0.0, 2.0]]), OperatorKind.UNITARY)

    def test_projector_kind_rejects_nonidempotent(self):
        with pytest.raises(ValueError):
            PolarizationOperator(np.array([[0.5, 0.0], [0.0, 2.0]]), OperatorKind.PROJECTOR)

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            PolarizationOperator(np.eye(3), OperatorKind.UNITARY)
