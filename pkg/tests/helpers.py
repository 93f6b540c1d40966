"""Shared bench builders for the test suite."""

from __future__ import annotations

from dataclasses import replace

from eraserbench.bench_config import BenchConfig, ScanSpec
from eraserbench.coincidence import CoincidenceSpec
from eraserbench.event_timeline import Detector, DetectorSpec
from eraserbench.photon_source import SourceKind, SourceSpec


def make_bench(
    kind: SourceKind = SourceKind.ENTANGLED,
    *,
    coherence: float = 0.73,
    efficiency: float = 1.0,
    pair_rate_hz: float = 2000.0,
    n_steps: int = 40,
    dwell_s: float = 5.0,
    jitter_sigma_ps: float = 350.0,
    dark_rate_hz: float = 0.0,
    window_ps: int = 8000,
    master_seed: int = 1,
    **overrides,
) -> BenchConfig:
    config = BenchConfig(
        source=SourceSpec(
            kind,
            pair_rate_hz=pair_rate_hz,
            duration_s=dwell_s,
            coherence=coherence,
        ),
        detectors={
            d: DetectorSpec(
                efficiency=efficiency,
                jitter_sigma_ps=jitter_sigma_ps,
                dark_rate_hz=dark_rate_hz,
            )
            for d in Detector
        },
        coincidence=CoincidenceSpec(window_ps=window_ps),
        scan=ScanSpec(n_steps=n_steps, dwell_s=dwell_s),
        master_seed=master_seed,
    )
    if overrides:
        config = replace(config, **overrides)
    return config
