"""Density-matrix algebra for the polarization state of a photon pair.

The pair state is a 4x4 complex density matrix over the ordered basis
(|HH>, |HV>, |VH>, |VV>); the first tensor factor is always the signal
photon and the second the idler.  Mixed states are first-class: every
operation takes and returns density matrices, and pure states enter
only through :func:`from_pure`.  Global phase is unobservable, so state
equality is always a matrix comparison, never a vector one.

All operations are pure functions of their inputs; nothing here holds
mutable state.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .optics import (
    MeasurementSetting,
    PolarizationOperator,
    Port,
    analyzer_projector,
)

__all__ = [
    "HH",
    "HV",
    "VH",
    "VV",
    "Subsystem",
    "TwoPhotonState",
    "SinglePhotonState",
    "from_pure",
    "apply_local",
    "partial_trace",
    "joint_probability",
    "port_probabilities",
    "born_probability",
    "dephase",
]

#: Basis indices into the 4x4 matrix (signal factor first).
HH, HV, VH, VV = 0, 1, 2, 3

CONSTRUCTION_ATOL = 1e-12
TRANSFORM_ATOL = 1e-10
PSD_ATOL = 1e-10


class Subsystem(Enum):
    SIGNAL = "signal"
    IDLER = "idler"


def _validated_density(matrix: np.ndarray, dim: int, atol: float) -> np.ndarray:
    m = np.array(matrix, dtype=np.complex128)
    if m.shape != (dim, dim):
        raise ValueError(f"density matrix must be {dim}x{dim}, got shape {m.shape}")
    if not np.allclose(m, m.conj().T, atol=atol):
        raise ValueError("density matrix must be Hermitian")
    trace = m.trace()
    if abs(trace - 1.0) > atol:
        raise ValueError(f"density matrix must have unit trace, got {trace.real:.15g}")
    smallest = np.linalg.eigvalsh(m)[0]
    if smallest < -PSD_ATOL:
        raise ValueError(
            f"density matrix must be positive semidefinite (min eigenvalue {smallest:.3e})"
        )
    m.setflags(write=False)
    return m


class TwoPhotonState:
    """4x4 density matrix of the signal (x) idler polarization pair."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray, *, atol: float = CONSTRUCTION_ATOL) -> None:
        self.matrix = _validated_density(matrix, 4, atol)

    def __repr__(self) -> str:
        return f"TwoPhotonState({np.array2string(self.matrix, precision=4, suppress_small=True)})"


class SinglePhotonState:
    """2x2 reduced density matrix of one photon in the (|H>, |V>) basis."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray, *, atol: float = CONSTRUCTION_ATOL) -> None:
        self.matrix = _validated_density(matrix, 2, atol)

    def __repr__(self) -> str:
        return f"SinglePhotonState({np.array2string(self.matrix, precision=4, suppress_small=True)})"


def from_pure(amplitudes) -> TwoPhotonState:
    """Normalized projector onto a pure pair state.

    ``amplitudes`` holds the four components in (HH, HV, VH, VV) order;
    any overall scale and phase are removed.
    """
    v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if v.shape != (4,):
        raise ValueError(f"expected 4 amplitudes, got {v.shape}")
    norm = np.linalg.norm(v)
    if not norm > 0 or not np.isfinite(norm):
        raise ValueError("amplitude vector must be nonzero and finite")
    psi = v / norm
    return TwoPhotonState(np.outer(psi, psi.conj()))


def apply_local(
    state: TwoPhotonState,
    op_signal: PolarizationOperator,
    op_idler: PolarizationOperator,
) -> tuple[TwoPhotonState | None, float]:
    """Apply one operator per photon; returns (new state, success probability).

    Unitary inputs preserve the trace, so the probability is 1.  For
    projective inputs the returned state is renormalized and the
    probability is the pre-normalization trace; a fully blocked state
    comes back as ``(None, 0.0)``.
    """
    u = np.kron(op_signal.matrix, op_idler.matrix)
    out = u @ state.matrix @ u.conj().T
    prob = float(out.trace().real)
    if prob <= 1e-14:
        return None, 0.0
    return TwoPhotonState(out / prob, atol=TRANSFORM_ATOL), min(prob, 1.0)


def partial_trace(state: TwoPhotonState, keep: Subsystem) -> SinglePhotonState:
    """Reduced density matrix of one photon, averaging over the other."""
    r = state.matrix.reshape(2, 2, 2, 2)
    if keep is Subsystem.SIGNAL:
        reduced = np.einsum("aibi->ab", r)
    else:
        reduced = np.einsum("iaib->ab", r)
    return SinglePhotonState(reduced, atol=TRANSFORM_ATOL)


def born_probability(state: SinglePhotonState, projector: PolarizationOperator) -> float:
    """Single-photon Born rule tr(rho P), clipped to [0, 1]."""
    p = float(np.einsum("ij,ji->", state.matrix, projector.matrix).real)
    return min(max(p, 0.0), 1.0)


def joint_probability(
    state: TwoPhotonState, signal: MeasurementSetting, idler: MeasurementSetting
) -> float:
    """Born-rule probability of one joint analyzer outcome, tr(rho (Ps x Pi))."""
    p = np.kron(analyzer_projector(signal).matrix, analyzer_projector(idler).matrix)
    value = float(np.einsum("ij,ji->", state.matrix, p).real)
    return min(max(value, 0.0), 1.0)


_PORT_PAIRS = (
    (Port.TRANSMITTED, Port.TRANSMITTED),
    (Port.TRANSMITTED, Port.REFLECTED),
    (Port.REFLECTED, Port.TRANSMITTED),
    (Port.REFLECTED, Port.REFLECTED),
)


def port_probabilities(
    state: TwoPhotonState, signal_angle_rad: float, idler_angle_rad: float
) -> np.ndarray:
    """All four joint port probabilities at fixed analyzer angles.

    Order: (T,T), (T,R), (R,T), (R,R), signal port first.  The four
    outcomes are exhaustive, so they must sum to one; a violation beyond
    1e-8 indicates an internal inconsistency and raises.
    """
    probs = np.empty(4)
    for k, (sp, ip) in enumerate(_PORT_PAIRS):
        probs[k] = joint_probability(
            state,
            MeasurementSetting(signal_angle_rad, sp),
            MeasurementSetting(idler_angle_rad, ip),
        )
    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise RuntimeError(f"joint port probabilities sum to {total!r}, expected 1")
    return probs


def dephase(state: TwoPhotonState, coherence: float) -> TwoPhotonState:
    """Scale the HH-VV off-diagonal elements by ``coherence`` in [0, 1].

    1 leaves the state untouched; 0 removes the coherences entirely,
    leaving the classical HV mixture.  Diagonal entries never change.
    """
    if not 0.0 <= coherence <= 1.0:
        raise ValueError(f"coherence must lie in [0, 1], got {coherence}")
    m = np.array(state.matrix)
    m[HH, VV] *= coherence
    m[VV, HH] *= coherence
    return TwoPhotonState(m, atol=TRANSFORM_ATOL)
