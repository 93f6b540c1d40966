"""Pair source: prepared polarization states and Poisson-process emission.

A source is stationary over a run: one prepared state is shared by all
emissions and outcomes are sampled i.i.d. from it, which is
statistically identical to preparing a fresh state per pair.  The two
photons of a pair are emitted simultaneously on the picosecond grid;
their timestamps only separate downstream (geometry, jitter,
electronics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .optics import half_wave_plate
from .quantum_state import TwoPhotonState, apply_local, dephase, from_pure

__all__ = [
    "SourceKind",
    "SourceSpec",
    "PairEmission",
    "MAX_EXPECTED_PAIRS",
    "prepare_state",
    "emission_times",
    "emit_pairs",
    "joint_hwp_rotation",
]

PS_PER_SECOND = 1_000_000_000_000

#: Guard against runaway event counts (pair_rate_hz * duration_s).
MAX_EXPECTED_PAIRS = 1_000_000_000


class SourceKind(Enum):
    ENTANGLED = "entangled"
    MIXED_DIAGONAL = "mixed_diagonal"
    MIXED_HV = "mixed_hv"


@dataclass(frozen=True)
class SourceSpec:
    """Source configuration.

    ``phase_offset_rad`` is the relative phase between the HH and VV
    components of the entangled state, a constant per run.
    ``coherence`` scales their off-diagonal terms (1 = ideal pair,
    0 = classical HV mixture) and is the single knob standing in for
    precompensation quality, alignment, and crystal walk-off.  Both
    fields are ignored by the mixed source kinds.
    """

    kind: SourceKind
    pair_rate_hz: float = 2000.0
    duration_s: float = 5.0
    phase_offset_rad: float = 0.0
    coherence: float = 0.73

    def __post_init__(self) -> None:
        if not self.pair_rate_hz > 0:
            raise ValueError("pair_rate_hz must be positive")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if not 0.0 <= self.coherence <= 1.0:
            raise ValueError("coherence must lie in [0, 1]")


@dataclass(frozen=True)
class PairEmission:
    """One pair-creation event: timestamp plus the shared prepared state."""

    time_ps: int
    prepared_state: TwoPhotonState


def prepare_state(spec: SourceSpec) -> TwoPhotonState:
    """Initial two-photon polarization state emitted by the source."""
    if spec.kind is SourceKind.ENTANGLED:
        amps = np.array(
            [1.0, 0.0, 0.0, np.exp(1j * spec.phase_offset_rad)]
        ) / math.sqrt(2.0)
        return dephase(from_pure(amps), spec.coherence)
    if spec.kind is SourceKind.MIXED_DIAGONAL:
        plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
        minus = np.array([1.0, -1.0]) / math.sqrt(2.0)
        pp = np.kron(plus, plus)
        mm = np.kron(minus, minus)
        return TwoPhotonState(0.5 * np.outer(pp, pp) + 0.5 * np.outer(mm, mm))
    if spec.kind is SourceKind.MIXED_HV:
        return TwoPhotonState(np.diag([0.5, 0.0, 0.0, 0.5]))
    raise TypeError(f"unknown source kind: {spec.kind!r}")


def emission_times(
    pair_rate_hz: float, duration_s: float, rng: np.random.Generator
) -> np.ndarray:
    """Homogeneous Poisson emission times, integer picoseconds, strictly increasing."""
    expected = pair_rate_hz * duration_s
    if expected > MAX_EXPECTED_PAIRS:
        raise ValueError(
            f"expected pair count {expected:.3g} exceeds the {MAX_EXPECTED_PAIRS:.0e} guard"
        )
    n = int(rng.poisson(expected))
    if n == 0:
        return np.empty(0, dtype=np.int64)
    t = np.sort(rng.random(n)) * (duration_s * PS_PER_SECOND)
    t = np.floor(t).astype(np.int64)
    # Collisions on the 1 ps grid are rare; nudge them forward so times
    # stay strictly increasing.
    idx = np.arange(n, dtype=np.int64)
    return np.maximum.accumulate(t - idx) + idx


def emit_pairs(spec: SourceSpec, seed: int) -> list[PairEmission]:
    """Deterministic emission list for one run; same seed, same list."""
    rng = np.random.default_rng(int(seed))
    times = emission_times(spec.pair_rate_hz, spec.duration_s, rng)
    state = prepare_state(spec)
    return [PairEmission(int(t), state) for t in times]


def joint_hwp_rotation(state: TwoPhotonState, theta_rad: float) -> TwoPhotonState:
    """Rotate both photons with identical half-wave plates after the source."""
    hwp = half_wave_plate(theta_rad)
    rotated, _ = apply_local(state, hwp, hwp)
    assert rotated is not None  # unitary, trace preserved
    return rotated
