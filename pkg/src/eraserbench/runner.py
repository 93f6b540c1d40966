"""Experiment protocols: fringe scans, delay comparisons, CHSH, and friends.

Every protocol is a pure function of (config, master_seed).  Per-interval
seeds derive from sha256("master:label:index"), which is stable across
platforms and releases; scan points therefore parallelize freely and the
assembled output is independent of execution order.  Matched-seed
experiments (delay modes, blocked/unblocked) reuse the same point labels
so their random draws line up one to one.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from .bench_config import (
    BenchConfig,
    ERASURE_HWP_RAD,
    WHICH_WAY_HWP_RAD,
)
from .coincidence import CountTable, count_table
from .event_timeline import arm_delay_ps, run_interval
from .optics import BlockPath, actuator_to_phase
from .photon_source import prepare_state
from .analysis import InsufficientStatisticsError

__all__ = [
    "DelayMode",
    "ScanRow",
    "DelayComparison",
    "ChshResult",
    "BeamBlockResult",
    "RotationScans",
    "derive_seed",
    "run_fringe_scan",
    "delayed_config",
    "run_delay_comparison",
    "run_chsh",
    "run_beam_block",
    "run_rotation_invariance",
    "run_overshoot_study",
    "scan_positions",
    "scan_counts",
    "fringe_points",
    "CHSH_SIGNAL_ANGLES_RAD",
    "CHSH_IDLER_ANGLES_RAD",
    "polarizer_to_hwp",
    "FREE_SPACE_DETOUR_M",
    "DELAYED_FIBER_M",
]

#: Extra free-space path of the mirror detour, and the long idler fiber.
FREE_SPACE_DETOUR_M = 2.0
DELAYED_FIBER_M = 5.0


class DelayMode(Enum):
    NONE = "none"
    FREE_SPACE_2M = "free_space_2m"
    FIBER_5M = "fiber_5m"


@dataclass(frozen=True)
class ScanRow:
    """One scan point: actuator position, derived phase, and its counts."""

    actuator_um: float
    delta_phi_rad: float
    counts: CountTable


def derive_seed(master_seed: int, *parts) -> int:
    """Stable per-task seed: first 8 bytes of sha256 over the labels."""
    payload = ":".join([str(int(master_seed)), *map(str, parts)]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


def _run_points(
    config: BenchConfig,
    point: Callable[[int], ScanRow],
    n_workers: int = 1,
) -> list[ScanRow]:
    indices = range(config.scan.n_steps)
    if n_workers <= 1:
        return [point(i) for i in indices]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(point, indices))


def run_fringe_scan(config: BenchConfig, n_workers: int = 1) -> list[ScanRow]:
    """Scan the actuator and record a count table per dwell interval."""
    state = prepare_state(config.source)
    scan = config.scan

    def point(i: int) -> ScanRow:
        pos = scan.start_um + i * scan.step_um
        phi = actuator_to_phase(pos, config.calibration)
        seed = derive_seed(config.master_seed, "point", i)
        streams = run_interval(state, config, scan.dwell_s, seed, delta_phi_rad=phi)
        return ScanRow(pos, phi, count_table(streams, config.coincidence, scan.dwell_s))

    return _run_points(config, point, n_workers)


def delayed_config(
    config: BenchConfig,
    mode: DelayMode,
    *,
    detour_collection: float = 1.0 / 7.0,
    compensate: bool = True,
) -> tuple[BenchConfig, int]:
    """Bench with the chosen idler delay installed; returns (config, delay_ps).

    The free-space mode adds the mirror detour before the idler analyzer
    and multiplies the idler collection by ``detour_collection`` (beam
    spreading); the fiber mode lengthens the idler fiber after the
    analyzer.  With ``compensate`` the signal electronics are delayed by
    exactly the added optical transit, tick for tick.
    """
    if mode is DelayMode.NONE:
        return config, 0
    if mode is DelayMode.FREE_SPACE_2M:
        idler = replace(
            config.idler_arm,
            extra_free_space_m=config.idler_arm.extra_free_space_m + FREE_SPACE_DETOUR_M,
            collection=config.idler_arm.collection * detour_collection,
        )
    elif mode is DelayMode.FIBER_5M:
        idler = replace(config.idler_arm, fiber_m=DELAYED_FIBER_M)
    else:
        raise TypeError(f"unknown delay mode: {mode!r}")
    added_ps = arm_delay_ps(idler) - arm_delay_ps(config.idler_arm)
    signal = config.signal_arm
    if compensate:
        signal = replace(
            signal, electrical_delay_ps=signal.electrical_delay_ps + added_ps
        )
    return replace(config, idler_arm=idler, signal_arm=signal), added_ps


@dataclass
class DelayComparison:
    mode: DelayMode
    baseline: list[ScanRow]
    delayed: list[ScanRow]
    delay_ps: int
    compensated: bool


def run_delay_comparison(
    config: BenchConfig,
    mode: DelayMode,
    *,
    detour_collection: float = 1.0 / 7.0,
    compensate: bool = True,
) -> DelayComparison:
    """Run the same scan without and with the chosen idler delay.

    Point seeds match between the two scans, so with compensation the
    physics draws are identical and only timestamps move.
    """
    baseline = run_fringe_scan(config)
    delayed, added_ps = delayed_config(
        config, mode, detour_collection=detour_collection, compensate=compensate
    )
    rows = run_fringe_scan(delayed) if mode is not DelayMode.NONE else run_fringe_scan(config)
    return DelayComparison(
        mode=mode,
        baseline=baseline,
        delayed=rows,
        delay_ps=added_ps,
        compensated=compensate,
    )


#: Correlation-test polarizer angles (radians from vertical): the signal
#: analyzer alternates between the first pair, the idler between the second.
CHSH_SIGNAL_ANGLES_RAD = (math.radians(-45.0), 0.0)
CHSH_IDLER_ANGLES_RAD = (math.radians(-22.5), math.radians(22.5))


def polarizer_to_hwp(polarizer_angle_rad: float) -> float:
    """Wave-plate angle whose transmitted port passes the given linear polarization."""
    return (-polarizer_angle_rad / 2.0) % math.pi


@dataclass
class ChshResult:
    """Bell-test statistic with Poisson error propagation."""

    s_value: float
    sigma_s: float
    e_values: tuple[float, float, float, float]
    n_per_setting: tuple[int, int, int, int]
    setting_pairs_rad: tuple[tuple[float, float], ...]


def run_chsh(
    config: BenchConfig,
    signal_angles_rad: tuple[float, float] = CHSH_SIGNAL_ANGLES_RAD,
    idler_angles_rad: tuple[float, float] = CHSH_IDLER_ANGLES_RAD,
) -> ChshResult:
    """Measure S = E(a,b) - E(a,b') + E(a',b) + E(a',b').

    Each setting pair integrates for one dwell interval at zero
    interferometer phase.  E is the standard count combination
    (N_AB + N_A'B' - N_AB' - N_A'B) / N_total; sigma_S assumes
    independent Poisson counts per setting.
    """
    a, ap = signal_angles_rad
    b, bp = idler_angles_rad
    settings = ((a, b), (a, bp), (ap, b), (ap, bp))
    signs = (1.0, -1.0, 1.0, 1.0)
    state = prepare_state(config.source)
    e_values: list[float] = []
    totals: list[int] = []
    variance = 0.0
    for k, (sig_angle, idl_angle) in enumerate(settings):
        cfg = replace(
            config,
            signal_hwp_rad=polarizer_to_hwp(sig_angle),
            idler_hwp_rad=polarizer_to_hwp(idl_angle),
        )
        seed = derive_seed(config.master_seed, "chsh", k)
        streams = run_interval(state, cfg, config.scan.dwell_s, seed, delta_phi_rad=0.0)
        t = count_table(streams, config.coincidence, config.scan.dwell_s)
        total = t.total_coincidences
        if total == 0:
            raise InsufficientStatisticsError(
                f"no coincidences for setting pair {k} (angles {sig_angle}, {idl_angle})"
            )
        e = (t.n_ab + t.n_apbp - t.n_abp - t.n_apb) / total
        e_values.append(e)
        totals.append(total)
        variance += max(1.0 - e * e, 0.0) / total
    s_value = sum(sign * e for sign, e in zip(signs, e_values))
    return ChshResult(
        s_value=float(s_value),
        sigma_s=float(math.sqrt(variance)),
        e_values=tuple(e_values),
        n_per_setting=tuple(totals),
        setting_pairs_rad=settings,
    )


@dataclass
class BeamBlockResult:
    n_hh_blocked: int
    n_hh_unblocked: int

    @property
    def ratio(self) -> float:
        if self.n_hh_unblocked == 0:
            raise InsufficientStatisticsError("no unblocked coincidences")
        return self.n_hh_blocked / self.n_hh_unblocked


def run_beam_block(config: BenchConfig) -> BeamBlockResult:
    """Blocked versus unblocked coincidences heralded by a horizontal idler.

    The idler analyzer sits in the HV basis and its H port (A') heralds;
    the signal is analyzed diagonally and its transmitted port (B) is
    counted.  A block in the interferometer's V path leaves the heralded
    rate unchanged when the pair carries perfect HV correlations (the
    herald already selects the open path) and halves it when each signal
    photon takes both paths with equal amplitude, as in the diagonal
    mixture.  Both runs use matched seeds.
    """
    base = replace(
        config,
        signal_hwp_rad=ERASURE_HWP_RAD,
        idler_hwp_rad=WHICH_WAY_HWP_RAD,
        beam_block=None,
    )
    state = prepare_state(config.source)
    seed = derive_seed(config.master_seed, "point", 0)
    dwell = config.scan.dwell_s

    def heralded(cfg: BenchConfig) -> int:
        streams = run_interval(state, cfg, dwell, seed, delta_phi_rad=0.0)
        return count_table(streams, config.coincidence, dwell).n_apb

    unblocked = heralded(base)
    blocked = heralded(replace(base, beam_block=BlockPath.V_PATH))
    return BeamBlockResult(n_hh_blocked=blocked, n_hh_unblocked=unblocked)


@dataclass
class RotationScans:
    rotation_rad: float
    erasure: list[ScanRow]
    which_way: list[ScanRow]


def run_rotation_invariance(
    config: BenchConfig, angles_rad: list[float] | tuple[float, ...]
) -> list[RotationScans]:
    """Repeat erasure and which-way scans with both photons jointly rotated."""
    out: list[RotationScans] = []
    for theta in angles_rad:
        cfg = replace(config, source_rotation_rad=float(theta))
        erasure = run_fringe_scan(
            replace(cfg, signal_hwp_rad=ERASURE_HWP_RAD, idler_hwp_rad=ERASURE_HWP_RAD)
        )
        which_way = run_fringe_scan(
            replace(cfg, signal_hwp_rad=ERASURE_HWP_RAD, idler_hwp_rad=WHICH_WAY_HWP_RAD)
        )
        out.append(RotationScans(float(theta), erasure, which_way))
    return out


def run_overshoot_study(config: BenchConfig, epsilon_rad: float) -> list[ScanRow]:
    """Which-way scan with the idler plate overshot past zero by epsilon.

    The travel from the erasure setting down to the which-way setting
    overshoots through zero, so the plate lands at -epsilon: the state
    component that previously left one analyzer port now exits the
    opposite one, flipping the residual fringe phase.
    """
    if abs(epsilon_rad) >= math.radians(5.0):
        raise ValueError("overshoot must stay below 5 degrees")
    cfg = replace(
        config,
        signal_hwp_rad=ERASURE_HWP_RAD,
        idler_hwp_rad=(-abs(epsilon_rad)) % math.pi,
    )
    return run_fringe_scan(cfg)


def scan_positions(rows: list[ScanRow]) -> np.ndarray:
    return np.array([r.actuator_um for r in rows])


def scan_counts(rows: list[ScanRow], channels: tuple[str, ...] = ("n_ab", "n_apb")) -> np.ndarray:
    """Selected count columns as a (points x channels) array."""
    return np.array([[getattr(r.counts, ch) for ch in channels] for r in rows])


def fringe_points(rows: list[ScanRow], channel: str = "n_ab") -> list[tuple[float, float]]:
    """(position, count) pairs for one channel, ready for the fitter."""
    return [(r.actuator_um, float(getattr(r.counts, channel))) for r in rows]
