"""Event-level simulator of a polarization quantum-eraser optical bench.

The package is layered bottom up: Jones operators and two-photon
density matrices (:mod:`.optics`, :mod:`.quantum_state`), a pair source
and timestamped detection pipeline (:mod:`.photon_source`,
:mod:`.event_timeline`), coincidence gating (:mod:`.coincidence`),
experiment protocols (:mod:`.runner`), fringe fitting and statistics
(:mod:`.analysis`), and a config/CLI layer (:mod:`.bench_config`,
:mod:`.cli`).
"""

from .optics import (
    ActuatorCalibration,
    BlockPath,
    DEFAULT_CALIBRATION,
    MeasurementSetting,
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
from .quantum_state import (
    SinglePhotonState,
    Subsystem,
    TwoPhotonState,
    apply_local,
    dephase,
    from_pure,
    joint_probability,
    partial_trace,
    port_probabilities,
)
from .photon_source import (
    PairEmission,
    SourceKind,
    SourceSpec,
    emit_pairs,
    joint_hwp_rotation,
    prepare_state,
)
from .event_timeline import (
    ArmGeometry,
    Detector,
    DetectorSpec,
    EventStreams,
    PhotonEvent,
    arrival_time,
    dark_events,
    detect,
    run_interval,
    sample_ports,
)
from .coincidence import CoincidenceSpec, CountTable, accidental_rate, count_pairs, count_table
from .analysis import (
    Chi2Result,
    FitError,
    FringeFit,
    InsufficientStatisticsError,
    compare_scans,
    distinguishability,
    fit_fringe,
    poisson_consistency,
)
from .bench_config import (
    BenchConfig,
    ConfigError,
    ERASURE_HWP_RAD,
    Experiment,
    RunManifest,
    ScanSpec,
    WHICH_WAY_HWP_RAD,
    load_config,
    load_manifest,
    parse_config,
    serialize_config,
)
from .runner import (
    BeamBlockResult,
    ChshResult,
    DelayComparison,
    DelayMode,
    ScanRow,
    derive_seed,
    run_beam_block,
    run_chsh,
    run_delay_comparison,
    run_fringe_scan,
    run_overshoot_study,
    run_rotation_invariance,
)

__version__ = "0.1.0"
