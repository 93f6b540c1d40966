"""Jones-calculus models of the bench optics.

All operators are 2x2 complex matrices over the (|H>, |V>) polarization
basis of one photon.  Constructors are stateless and return immutable
values, safe for unrestricted concurrent use.

Fixed conventions, used consistently throughout the package:

* Wave-plate angles are measured from the vertical fast axis.
* The polarizing beamsplitter transmits vertical polarization and
  reflects horizontal (the same convention as the interferometer
  prisms, which transmit the vertical component).
* Mirror s/p axes are taken to coincide with H/V, so a mirror is a
  pure relative phase between the two components.
* The interferometer collapses to a single diagonal phase operator:
  path recombination is treated as lossless, with residual
  misalignment absorbed into the source coherence parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "OperatorKind",
    "Port",
    "BlockPath",
    "MeasurementSetting",
    "PolarizationOperator",
    "ActuatorCalibration",
    "DEFAULT_CALIBRATION",
    "IDENTITY",
    "half_wave_plate",
    "interferometer_phase",
    "pbs_projector",
    "analyzer_projector",
    "mirror",
    "beam_block",
    "actuator_to_phase",
]

_ATOL = 1e-10


class OperatorKind(Enum):
    UNITARY = "unitary"
    PROJECTOR = "projector"


class Port(Enum):
    """Output port of a polarizing beamsplitter."""

    TRANSMITTED = "transmitted"
    REFLECTED = "reflected"


class BlockPath(Enum):
    """Interferometer path occluded by a beam block."""

    H_PATH = "h_path"
    V_PATH = "v_path"


@dataclass(frozen=True)
class MeasurementSetting:
    """Polarization-analyzer setting: wave-plate angle plus monitored port.

    The angle is normalized to [0, pi); a half-wave plate is periodic in
    pi up to an unobservable global phase.
    """

    hwp_angle_rad: float
    port: Port

    def __post_init__(self) -> None:
        if not math.isfinite(self.hwp_angle_rad):
            raise ValueError("hwp_angle_rad must be finite")
        object.__setattr__(self, "hwp_angle_rad", self.hwp_angle_rad % math.pi)


class PolarizationOperator:
    """Validated 2x2 Jones operator, either a unitary element or a projector."""

    __slots__ = ("matrix", "kind")

    def __init__(self, matrix: np.ndarray, kind: OperatorKind) -> None:
        m = np.array(matrix, dtype=np.complex128)
        if m.shape != (2, 2):
            raise ValueError(f"polarization operator must be 2x2, got shape {m.shape}")
        if kind is OperatorKind.UNITARY:
            if not np.allclose(m.conj().T @ m, np.eye(2), atol=_ATOL):
                raise ValueError("operator declared unitary fails U+ U = I")
        elif kind is OperatorKind.PROJECTOR:
            if not np.allclose(m @ m, m, atol=_ATOL) or not np.allclose(m, m.conj().T, atol=_ATOL):
                raise ValueError("operator declared projector fails P P = P = P+")
        else:
            raise TypeError(f"unknown operator kind: {kind!r}")
        m.setflags(write=False)
        self.matrix = m
        self.kind = kind

    def __repr__(self) -> str:
        flat = np.array2string(self.matrix, precision=4, suppress_small=True)
        return f"PolarizationOperator(kind={self.kind.value}, matrix={flat})"


IDENTITY = PolarizationOperator(np.eye(2), OperatorKind.UNITARY)


def half_wave_plate(theta_rad: float) -> PolarizationOperator:
    """Half-wave plate with its fast axis at ``theta_rad``.

    Jones matrix [[cos 2t, sin 2t], [sin 2t, -cos 2t]]: Hermitian,
    unitary, and an involution.  At 22.5 deg it exchanges the HV and
    diagonal bases; at 0 deg it fixes the HV basis up to sign; at
    45 deg it swaps H and V.
    """
    if not math.isfinite(theta_rad):
        raise ValueError("theta_rad must be finite")
    c = math.cos(2.0 * theta_rad)
    s = math.sin(2.0 * theta_rad)
    return PolarizationOperator(np.array([[c, s], [s, -c]]), OperatorKind.UNITARY)


def interferometer_phase(delta_phi_rad: float) -> PolarizationOperator:
    """Relative phase picked up between the H and V interferometer paths."""
    if not math.isfinite(delta_phi_rad):
        raise ValueError("delta_phi_rad must be finite")
    return PolarizationOperator(
        np.diag([1.0, np.exp(1j * delta_phi_rad)]), OperatorKind.UNITARY
    )


def pbs_projector(port: Port) -> PolarizationOperator:
    """Projector selected by one polarizing-beamsplitter output port."""
    if port is Port.TRANSMITTED:
        m = np.diag([0.0, 1.0])  # |V><V|
    else:
        m = np.diag([1.0, 0.0])  # |H><H|
    return PolarizationOperator(m, OperatorKind.PROJECTOR)


def analyzer_projector(setting: MeasurementSetting) -> PolarizationOperator:
    """Projector implemented by a wave plate followed by a PBS port.

    P = U+ P_port U with U the wave plate.  At 22.5 deg the two ports
    project onto the diagonal basis (transmitted picks out -45 deg,
    reflected +45 deg); at 0 deg onto V (transmitted) and H (reflected).
    """
    u = half_wave_plate(setting.hwp_angle_rad).matrix
    p = pbs_projector(setting.port).matrix
    return PolarizationOperator(u.conj().T @ p @ u, OperatorKind.PROJECTOR)


def mirror(delta_rad: float) -> PolarizationOperator:
    """Dielectric mirror: relative phase ``delta_rad`` between s and p."""
    if not math.isfinite(delta_rad):
        raise ValueError("delta_rad must be finite")
    return PolarizationOperator(
        np.diag([1.0, np.exp(1j * delta_rad)]), OperatorKind.UNITARY
    )


def beam_block(path: BlockPath) -> PolarizationOperator:
    """Beam block in one interferometer path.

    Returns the projector onto the surviving polarization; applying it
    scales the state trace by the survival probability.
    """
    if path is BlockPath.V_PATH:
        m = np.diag([1.0, 0.0])
    else:
        m = np.diag([0.0, 1.0])
    return PolarizationOperator(m, OperatorKind.PROJECTOR)


@dataclass(frozen=True)
class ActuatorCalibration:
    """Linear map from actuator travel (microns) to interferometer phase."""

    radians_per_micron: float
    origin_offset_rad: float = 0.0

    def __post_init__(self) -> None:
        if not self.radians_per_micron > 0:
            raise ValueError("radians_per_micron must be positive")


#: One fringe per 4.4 um of travel, i.e. ten 0.44 um steps per fringe.
DEFAULT_CALIBRATION = ActuatorCalibration(radians_per_micron=2.0 * math.pi / 4.4)


def actuator_to_phase(position_um: float, cal: ActuatorCalibration) -> float:
    """Interferometer phase at an actuator position (strictly linear)."""
    if not math.isfinite(position_um):
        raise ValueError("position_um must be finite")
    return cal.origin_offset_rad + cal.radians_per_micron * position_um
