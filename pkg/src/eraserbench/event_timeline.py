"""Timestamped propagation and detection of the photon pairs.

The time base is unsigned integer picoseconds: fine enough that
optical-path rounding is negligible against detector jitter and the
coincidence window, and immune to floating-point timestamp comparison
hazards.  A run interval turns one prepared pair state plus a bench
description into four time-sorted detector streams (A and A' watch the
idler analyzer ports, B and B' the signal ports).

Randomness is split into independent substreams (emission, port
outcomes, beam-block survival, detection, dark counts), so changing a
pure-delay parameter never changes which outcomes are drawn: delays
move timestamps only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .optics import (
    IDENTITY,
    BlockPath,
    MeasurementSetting,
    OperatorKind,
    PolarizationOperator,
    Port,
    analyzer_projector,
    beam_block,
    interferometer_phase,
    mirror,
)
from .photon_source import emission_times, joint_hwp_rotation
from .quantum_state import (
    Subsystem,
    TwoPhotonState,
    apply_local,
    born_probability,
    partial_trace,
    port_probabilities,
)

if TYPE_CHECKING:
    from .bench_config import BenchConfig

__all__ = [
    "SPEED_OF_LIGHT_M_PER_S",
    "Detector",
    "DETECTOR_ORDER",
    "ArmGeometry",
    "DetectorSpec",
    "PhotonEvent",
    "EventStreams",
    "arm_delay_ps",
    "arrival_time",
    "sample_ports",
    "sample_port_codes",
    "detect",
    "dark_times",
    "dark_events",
    "run_interval",
    "interval_port_codes",
    "dump_streams",
    "parse_streams",
    "write_streams",
    "read_streams",
]

SPEED_OF_LIGHT_M_PER_S = 299_792_458.0
PS_PER_SECOND = 1_000_000_000_000


class Detector(Enum):
    A = "A"
    A_PRIME = "Ap"
    B = "B"
    B_PRIME = "Bp"


DETECTOR_ORDER = (Detector.A, Detector.A_PRIME, Detector.B, Detector.B_PRIME)


@dataclass(frozen=True)
class ArmGeometry:
    """Optical and electrical path of one collection arm.

    ``collection`` multiplies the arm's detector efficiencies; it models
    beam spreading on long free-space detours as a pure loss.
    ``electrical_delay_ps`` is added to every detector signal in the arm
    and is the knob used to compensate optical delays in the other arm.
    """

    base_path_m: float = 0.0
    extra_free_space_m: float = 0.0
    fiber_m: float = 0.0
    fiber_speed_fraction: float = 2.0 / 3.0
    electrical_delay_ps: int = 0
    collection: float = 1.0

    def __post_init__(self) -> None:
        if self.base_path_m < 0 or self.extra_free_space_m < 0 or self.fiber_m < 0:
            raise ValueError("path lengths must be nonnegative")
        if not 0.0 < self.fiber_speed_fraction <= 1.0:
            raise ValueError("fiber_speed_fraction must lie in (0, 1]")
        if not 0.0 <= self.collection <= 1.0:
            raise ValueError("collection must lie in [0, 1]")


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float = 0.30
    jitter_sigma_ps: float = 350.0
    dark_rate_hz: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.jitter_sigma_ps < 0:
            raise ValueError("jitter_sigma_ps must be nonnegative")
        if self.dark_rate_hz < 0:
            raise ValueError("dark_rate_hz must be nonnegative")


@dataclass(frozen=True)
class PhotonEvent:
    detector: Detector
    time_ps: int

    def __post_init__(self) -> None:
        if self.time_ps < 0:
            raise ValueError("time_ps must be nonnegative")


@dataclass(eq=False)
class EventStreams:
    """Four time-sorted detector streams (int64 picosecond arrays)."""

    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray

    def stream(self, detector: Detector) -> np.ndarray:
        return {
            Detector.A: self.a,
            Detector.A_PRIME: self.a_prime,
            Detector.B: self.b,
            Detector.B_PRIME: self.b_prime,
        }[detector]

    def singles(self) -> dict[Detector, int]:
        return {d: int(self.stream(d).size) for d in DETECTOR_ORDER}


def arm_delay_ps(arm: ArmGeometry) -> int:
    """Transit time of one arm, rounded to the picosecond tick."""
    free_space_s = (arm.base_path_m + arm.extra_free_space_m) / SPEED_OF_LIGHT_M_PER_S
    fiber_s = arm.fiber_m / (arm.fiber_speed_fraction * SPEED_OF_LIGHT_M_PER_S)
    return int(round((free_space_s + fiber_s) * PS_PER_SECOND))


def arrival_time(emission_time_ps: int, arm: ArmGeometry) -> int:
    """Photon arrival at the arm's detector plane; monotone in each length."""
    return int(emission_time_ps) + arm_delay_ps(arm)


def sample_port_codes(
    state: TwoPhotonState,
    signal_angle_rad: float,
    idler_angle_rad: float,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``n`` joint port outcomes.

    Codes are (signal_port << 1) | idler_port with transmitted = 0 and
    reflected = 1, i.e. 0:(T,T) 1:(T,R) 2:(R,T) 3:(R,R).
    """
    probs = port_probabilities(state, signal_angle_rad, idler_angle_rad)
    p = np.clip(probs, 0.0, None)
    p /= p.sum()
    return rng.choice(4, size=int(n), p=p).astype(np.uint8)


def sample_ports(
    state: TwoPhotonState,
    signal_angle_rad: float,
    idler_angle_rad: float,
    rng: np.random.Generator,
) -> tuple[Port, Port]:
    """Draw one (signal, idler) port pair from the joint Born probabilities."""
    code = int(sample_port_codes(state, signal_angle_rad, idler_angle_rad, 1, rng)[0])
    ports = (Port.TRANSMITTED, Port.REFLECTED)
    return ports[code >> 1], ports[code & 1]


def detect(
    arrival_ps: int,
    spec: DetectorSpec,
    electrical_delay_ps: int,
    rng: np.random.Generator,
    detector: Detector = Detector.A,
) -> PhotonEvent | None:
    """Register one arriving photon: efficiency thinning plus Gaussian jitter."""
    if rng.random() >= spec.efficiency:
        return None
    t = float(arrival_ps)
    if spec.jitter_sigma_ps > 0:
        t += rng.normal(0.0, spec.jitter_sigma_ps)
    return PhotonEvent(detector, max(0, int(round(t)) + int(electrical_delay_ps)))


def dark_times(
    dark_rate_hz: float, duration_s: float, rng: np.random.Generator
) -> np.ndarray:
    """Dark-count timestamps: Poisson count, uniform over the interval."""
    n = int(rng.poisson(dark_rate_hz * duration_s))
    if n == 0:
        return np.empty(0, dtype=np.int64)
    span = int(duration_s * PS_PER_SECOND)
    return np.sort(rng.integers(0, max(span, 1), size=n, dtype=np.int64))


def dark_events(
    spec: DetectorSpec,
    duration_s: float,
    rng: np.random.Generator,
    detector: Detector = Detector.A,
) -> list[PhotonEvent]:
    return [PhotonEvent(detector, int(t)) for t in dark_times(spec.dark_rate_hz, duration_s, rng)]


def _effective_state(
    state: TwoPhotonState, bench: "BenchConfig", delta_phi_rad: float
) -> TwoPhotonState:
    """State at the analyzers: source rotation, signal phase, idler mirrors."""
    st = state
    if bench.source_rotation_rad != 0.0:
        st = joint_hwp_rotation(st, bench.source_rotation_rad)
    idler_op = IDENTITY
    if bench.mirror_deltas_rad:
        m = np.eye(2, dtype=np.complex128)
        for delta in bench.mirror_deltas_rad:
            m = mirror(delta).matrix @ m
        idler_op = PolarizationOperator(m, OperatorKind.UNITARY)
    out, _ = apply_local(st, interferometer_phase(delta_phi_rad), idler_op)
    assert out is not None
    return out


def _interval_outcomes(
    state: TwoPhotonState,
    bench: "BenchConfig",
    interval_s: float,
    seed: int,
    delta_phi_rad: float,
) -> tuple[np.ndarray, np.ndarray, np.random.Generator, np.random.Generator]:
    ss = np.random.SeedSequence(int(seed))
    emit_rng, port_rng, block_rng, det_rng, dark_rng = (
        np.random.default_rng(child) for child in ss.spawn(5)
    )
    times = emission_times(bench.source.pair_rate_hz, interval_s, emit_rng)
    n = times.size
    st = _effective_state(state, bench, delta_phi_rad)
    codes = np.zeros(n, dtype=np.uint8)
    if bench.beam_block is None:
        if n:
            codes = sample_port_codes(
                st, bench.signal_hwp_rad, bench.idler_hwp_rad, n, port_rng
            )
    else:
        surviving, p_survive = apply_local(st, beam_block(bench.beam_block), IDENTITY)
        alive = block_rng.random(n) < p_survive
        n_alive = int(alive.sum())
        if n_alive:
            codes[alive] = sample_port_codes(
                surviving, bench.signal_hwp_rad, bench.idler_hwp_rad, n_alive, port_rng
            )
        n_lost = n - n_alive
        if n_lost:
            # Absorbed signal photons: the idler still flies and is
            # analyzed; sample its port from the conditional marginal.
            other = (
                BlockPath.V_PATH
                if bench.beam_block is BlockPath.H_PATH
                else BlockPath.H_PATH
            )
            absorbed, _ = apply_local(st, beam_block(other), IDENTITY)
            assert absorbed is not None
            marginal = partial_trace(absorbed, Subsystem.IDLER)
            p_t = born_probability(
                marginal,
                analyzer_projector(
                    MeasurementSetting(bench.idler_hwp_rad, Port.TRANSMITTED)
                ),
            )
            lost_ports = (port_rng.random(n_lost) >= p_t).astype(np.uint8)
            codes[~alive] = 4 + lost_ports
    return times, codes, det_rng, dark_rng


def interval_port_codes(
    state: TwoPhotonState,
    bench: "BenchConfig",
    interval_s: float,
    seed: int,
    delta_phi_rad: float = 0.0,
) -> np.ndarray:
    """Outcome codes of one interval, for diagnostics.

    Codes 0..3 encode (signal port << 1) | idler port, transmitted = 0.
    With a beam block, absorbed pairs carry 4 (idler transmitted) or 5
    (idler reflected).  Pure-delay settings never enter the draw, so
    equal seeds give identical codes under any delay configuration.
    """
    _, codes, _, _ = _interval_outcomes(state, bench, interval_s, seed, delta_phi_rad)
    return codes


def _detect_stream(
    emitted_ps: np.ndarray,
    arm: ArmGeometry,
    spec: DetectorSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    delay = arm_delay_ps(arm)
    p = spec.efficiency * arm.collection
    keep = rng.random(emitted_ps.size) < p
    t = emitted_ps[keep].astype(np.float64) + delay
    if spec.jitter_sigma_ps > 0:
        t = t + rng.normal(0.0, spec.jitter_sigma_ps, t.size)
    out = np.rint(t).astype(np.int64) + int(arm.electrical_delay_ps)
    return np.maximum(out, 0)


def run_interval(
    state: TwoPhotonState,
    bench: "BenchConfig",
    interval_s: float,
    seed: int,
    delta_phi_rad: float = 0.0,
) -> EventStreams:
    """Simulate one integration interval end to end.

    Composes emission, port sampling, propagation delays, detection
    (thinning, jitter, electrical delay), and dark counts; returns the
    four sorted streams.  Deterministic in (state, bench, seed).
    """
    times, codes, det_rng, dark_rng = _interval_outcomes(
        state, bench, interval_s, seed, delta_phi_rad
    )
    routing = {
        Detector.A: (codes == 0) | (codes == 2) | (codes == 4),
        Detector.A_PRIME: (codes == 1) | (codes == 3) | (codes == 5),
        Detector.B: codes <= 1,
        Detector.B_PRIME: (codes == 2) | (codes == 3),
    }
    arms = {
        Detector.A: bench.idler_arm,
        Detector.A_PRIME: bench.idler_arm,
        Detector.B: bench.signal_arm,
        Detector.B_PRIME: bench.signal_arm,
    }
    streams: dict[Detector, np.ndarray] = {}
    for det in DETECTOR_ORDER:
        photon_t = _detect_stream(times[routing[det]], arms[det], bench.detectors[det], det_rng)
        dark_t = dark_times(bench.detectors[det].dark_rate_hz, interval_s, dark_rng)
        merged = np.concatenate([photon_t, dark_t]) if dark_t.size else photon_t
        streams[det] = np.sort(merged)
    return EventStreams(
        a=streams[Detector.A],
        a_prime=streams[Detector.A_PRIME],
        b=streams[Detector.B],
        b_prime=streams[Detector.B_PRIME],
    )


_DUMP_HEADER = "detector,time_ps"


def dump_streams(streams: EventStreams) -> str:
    """Serialize streams as one `detector,time_ps` record per line, time-sorted."""
    order = {d: k for k, d in enumerate(DETECTOR_ORDER)}
    records = [
        (int(t), order[det], det.value)
        for det in DETECTOR_ORDER
        for t in streams.stream(det)
    ]
    records.sort()
    lines = [_DUMP_HEADER]
    lines += [f"{label},{t}" for t, _, label in records]
    return "\n".join(lines) + "\n"


def parse_streams(text: str) -> EventStreams:
    """Inverse of :func:`dump_streams`; tolerant of a missing header line."""
    by_label: dict[str, list[int]] = {d.value: [] for d in DETECTOR_ORDER}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line == _DUMP_HEADER:
            continue
        try:
            label, t = line.split(",")
            by_label[label].append(int(t))
        except (ValueError, KeyError) as exc:
            raise ValueError(f"bad event record on line {lineno}: {line!r}") from exc
    arrays = {
        label: np.sort(np.asarray(ts, dtype=np.int64)) for label, ts in by_label.items()
    }
    return EventStreams(
        a=arrays[Detector.A.value],
        a_prime=arrays[Detector.A_PRIME.value],
        b=arrays[Detector.B.value],
        b_prime=arrays[Detector.B_PRIME.value],
    )


def write_streams(path, streams: EventStreams) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_streams(streams))


def read_streams(path) -> EventStreams:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_streams(fh.read())
