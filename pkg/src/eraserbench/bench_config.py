"""Bench description, plain-text config parsing, and run manifests.

Config files are INI-style text: ``[section]`` headers, ``key = value``
pairs, ``#`` comments, no interpolation.  Every key has a default;
``source.kind`` is the only required entry.  Unknown sections or keys
are rejected.  All angles are radians (keys carry the ``_rad`` suffix)
so that serialize/parse round-trips are bit exact.

Sections and defaults::

    [source]      kind (required), pair_rate_hz=2000.0, phase_offset_rad=0.0,
                  coherence=0.73, rotation_rad=0.0
    [signal_arm]  base_path_m=0.0, extra_free_space_m=0.0, fiber_m=1.0,
    [idler_arm]   fiber_speed_fraction=2/3, electrical_delay_ps=0, collection=1.0
    [detectors]   efficiency=0.3 (or efficiency_a/_ap/_b/_bp),
                  jitter_sigma_ps=350.0, dark_rate_hz=0.0
    [analyzers]   signal_hwp_rad=0.3926990816987241 (22.5 deg),
                  idler_hwp_rad=0.3926990816987241, mirror_deltas_rad= (empty),
                  beam_block=none
    [coincidence] window_ps=8000, compensation_a_ps=0, compensation_ap_ps=0,
                  compensation_b_ps=0, compensation_bp_ps=0
    [scan]        start_um=0.0, step_um=0.44, n_steps=40, dwell_s=5.0
    [calibration] radians_per_micron=1.4279966607226333 (one fringe per 4.4 um),
                  origin_offset_rad=0.0
    [run]         master_seed=0
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .coincidence import CoincidenceSpec
from .event_timeline import ArmGeometry, Detector, DetectorSpec
from .optics import DEFAULT_CALIBRATION, ActuatorCalibration, BlockPath
from .photon_source import SourceKind, SourceSpec

__all__ = [
    "ConfigError",
    "Experiment",
    "ScanSpec",
    "BenchConfig",
    "RunManifest",
    "ERASURE_HWP_RAD",
    "WHICH_WAY_HWP_RAD",
    "parse_config",
    "serialize_config",
    "load_config",
    "parse_manifest",
    "load_manifest",
]

ERASURE_HWP_RAD = math.radians(22.5)
WHICH_WAY_HWP_RAD = 0.0

SUPPORTED_FORMAT_VERSIONS = (1,)


class ConfigError(ValueError):
    """Malformed or invalid configuration text."""


class Experiment(Enum):
    FRINGE = "fringe"
    DELAY_COMPARE = "delay_compare"
    CHSH = "chsh"
    BEAM_BLOCK = "beam_block"
    ROTATION = "rotation"
    OVERSHOOT = "overshoot"


@dataclass(frozen=True)
class ScanSpec:
    """Actuator scan schedule."""

    start_um: float = 0.0
    step_um: float = 0.44
    n_steps: int = 40
    dwell_s: float = 5.0

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if not self.dwell_s > 0:
            raise ValueError("dwell_s must be positive")
        if self.step_um == 0:
            raise ValueError("step_um must be nonzero")


def _default_detectors() -> dict[Detector, DetectorSpec]:
    return {d: DetectorSpec() for d in Detector}


@dataclass
class BenchConfig:
    """Full description of one experimental arrangement."""

    source: SourceSpec
    signal_arm: ArmGeometry = field(default_factory=lambda: ArmGeometry(fiber_m=1.0))
    idler_arm: ArmGeometry = field(default_factory=lambda: ArmGeometry(fiber_m=1.0))
    detectors: dict[Detector, DetectorSpec] = field(default_factory=_default_detectors)
    signal_hwp_rad: float = ERASURE_HWP_RAD
    idler_hwp_rad: float = ERASURE_HWP_RAD
    mirror_deltas_rad: tuple[float, ...] = ()
    beam_block: BlockPath | None = None
    coincidence: CoincidenceSpec = field(default_factory=CoincidenceSpec)
    scan: ScanSpec = field(default_factory=ScanSpec)
    calibration: ActuatorCalibration = DEFAULT_CALIBRATION
    source_rotation_rad: float = 0.0
    master_seed: int = 0


_DETECTOR_SUFFIX = {
    Detector.A: "a",
    Detector.A_PRIME: "ap",
    Detector.B: "b",
    Detector.B_PRIME: "bp",
}

_SCHEMA: dict[str, tuple[str, ...]] = {
    "source": ("kind", "pair_rate_hz", "phase_offset_rad", "coherence", "rotation_rad"),
    "signal_arm": (
        "base_path_m",
        "extra_free_space_m",
        "fiber_m",
        "fiber_speed_fraction",
        "electrical_delay_ps",
        "collection",
    ),
    "idler_arm": (
        "base_path_m",
        "extra_free_space_m",
        "fiber_m",
        "fiber_speed_fraction",
        "electrical_delay_ps",
        "collection",
    ),
    "detectors": (
        "efficiency",
        "efficiency_a",
        "efficiency_ap",
        "efficiency_b",
        "efficiency_bp",
        "jitter_sigma_ps",
        "dark_rate_hz",
    ),
    "analyzers": ("signal_hwp_rad", "idler_hwp_rad", "mirror_deltas_rad", "beam_block"),
    "coincidence": (
        "window_ps",
        "compensation_a_ps",
        "compensation_ap_ps",
        "compensation_b_ps",
        "compensation_bp_ps",
    ),
    "scan": ("start_um", "step_um", "n_steps", "dwell_s"),
    "calibration": ("radians_per_micron", "origin_offset_rad"),
    "run": ("master_seed",),
}


class _Section:
    """One parsed section with typed, error-annotated accessors."""

    def __init__(self, name: str, items: dict[str, str]):
        self.name = name
        self.items = items

    def _convert(self, key: str, conv, default):
        if key not in self.items:
            return default
        raw = self.items[key]
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.name}.{key}: cannot parse {raw!r}: {exc}") from None

    def get_float(self, key: str, default: float) -> float:
        return self._convert(key, float, default)

    def get_int(self, key: str, default: int) -> int:
        return self._convert(key, int, default)

    def get_str(self, key: str, default: str | None) -> str | None:
        return self.items.get(key, default)


def _read_sections(text: str) -> dict[str, _Section]:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str  # keep key case
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    sections: dict[str, _Section] = {}
    for name in parser.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        items = dict(parser.items(name))
        for key in items:
            if key not in _SCHEMA[name]:
                raise ConfigError(f"unknown key {name}.{key}")
        sections[name] = _Section(name, items)
    for name in _SCHEMA:
        sections.setdefault(name, _Section(name, {}))
    return sections


def _build(section: str, ctor, **kwargs):
    try:
        return ctor(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _parse_arm(sec: _Section) -> ArmGeometry:
    return _build(
        sec.name,
        ArmGeometry,
        base_path_m=sec.get_float("base_path_m", 0.0),
        extra_free_space_m=sec.get_float("extra_free_space_m", 0.0),
        fiber_m=sec.get_float("fiber_m", 1.0),
        fiber_speed_fraction=sec.get_float("fiber_speed_fraction", 2.0 / 3.0),
        electrical_delay_ps=sec.get_int("electrical_delay_ps", 0),
        collection=sec.get_float("collection", 1.0),
    )


def parse_config(text: str) -> BenchConfig:
    """Parse and validate a bench config, filling documented defaults."""
    sections = _read_sections(text)

    src = sections["source"]
    kind_raw = src.get_str("kind", None)
    if kind_raw is None:
        raise ConfigError("source.kind is required (entangled, mixed_diagonal, or mixed_hv)")
    try:
        kind = SourceKind(kind_raw)
    except ValueError:
        raise ConfigError(
            f"source.kind: unknown kind {kind_raw!r} "
            f"(expected one of {[k.value for k in SourceKind]})"
        ) from None

    scan_sec = sections["scan"]
    scan = _build(
        "scan",
        ScanSpec,
        start_um=scan_sec.get_float("start_um", 0.0),
        step_um=scan_sec.get_float("step_um", 0.44),
        n_steps=scan_sec.get_int("n_steps", 40),
        dwell_s=scan_sec.get_float("dwell_s", 5.0),
    )

    source = _build(
        "source",
        SourceSpec,
        kind=kind,
        pair_rate_hz=src.get_float("pair_rate_hz", 2000.0),
        duration_s=scan.dwell_s,
        phase_offset_rad=src.get_float("phase_offset_rad", 0.0),
        coherence=src.get_float("coherence", 0.73),
    )

    det = sections["detectors"]
    shared_eff = det.get_float("efficiency", 0.30)
    jitter = det.get_float("jitter_sigma_ps", 350.0)
    dark = det.get_float("dark_rate_hz", 0.0)
    detectors = {}
    for d, suffix in _DETECTOR_SUFFIX.items():
        detectors[d] = _build(
            "detectors",
            DetectorSpec,
            efficiency=det.get_float(f"efficiency_{suffix}", shared_eff),
            jitter_sigma_ps=jitter,
            dark_rate_hz=dark,
        )

    ana = sections["analyzers"]
    deltas_raw = ana.get_str("mirror_deltas_rad", "") or ""
    try:
        mirror_deltas = tuple(float(v) for v in deltas_raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(
            f"analyzers.mirror_deltas_rad: cannot parse {deltas_raw!r} as a comma list of floats"
        ) from None
    block_raw = (ana.get_str("beam_block", "none") or "none").lower()
    if block_raw == "none":
        block = None
    else:
        try:
            block = BlockPath(block_raw)
        except ValueError:
            raise ConfigError(
                f"analyzers.beam_block: expected none, h_path, or v_path, got {block_raw!r}"
            ) from None

    coin = sections["coincidence"]
    compensation = {
        d: coin.get_int(f"compensation_{suffix}_ps", 0)
        for d, suffix in _DETECTOR_SUFFIX.items()
    }
    coincidence = _build(
        "coincidence",
        CoincidenceSpec,
        window_ps=coin.get_int("window_ps", 8000),
        compensation_ps=compensation,
    )

    cal_sec = sections["calibration"]
    calibration = _build(
        "calibration",
        ActuatorCalibration,
        radians_per_micron=cal_sec.get_float(
            "radians_per_micron", DEFAULT_CALIBRATION.radians_per_micron
        ),
        origin_offset_rad=cal_sec.get_float("origin_offset_rad", 0.0),
    )

    return BenchConfig(
        source=source,
        signal_arm=_parse_arm(sections["signal_arm"]),
        idler_arm=_parse_arm(sections["idler_arm"]),
        detectors=detectors,
        signal_hwp_rad=ana.get_float("signal_hwp_rad", ERASURE_HWP_RAD),
        idler_hwp_rad=ana.get_float("idler_hwp_rad", ERASURE_HWP_RAD),
        mirror_deltas_rad=mirror_deltas,
        beam_block=block,
        coincidence=coincidence,
        scan=scan,
        calibration=calibration,
        source_rotation_rad=src.get_float("rotation_rad", 0.0),
        master_seed=sections["run"].get_int("master_seed", 0),
    )


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: BenchConfig) -> str:
    """Emit a config that parses back to an equal BenchConfig, bit for bit."""
    lines: list[str] = []

    def section(name: str, pairs: list[tuple[str, object]]) -> None:
        lines.append(f"[{name}]")
        for key, value in pairs:
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")

    section(
        "source",
        [
            ("kind", config.source.kind.value),
            ("pair_rate_hz", config.source.pair_rate_hz),
            ("phase_offset_rad", config.source.phase_offset_rad),
            ("coherence", config.source.coherence),
            ("rotation_rad", config.source_rotation_rad),
        ],
    )
    for name, arm in (("signal_arm", config.signal_arm), ("idler_arm", config.idler_arm)):
        section(
            name,
            [
                ("base_path_m", arm.base_path_m),
                ("extra_free_space_m", arm.extra_free_space_m),
                ("fiber_m", arm.fiber_m),
                ("fiber_speed_fraction", arm.fiber_speed_fraction),
                ("electrical_delay_ps", arm.electrical_delay_ps),
                ("collection", arm.collection),
            ],
        )
    det_pairs: list[tuple[str, object]] = []
    for d, suffix in _DETECTOR_SUFFIX.items():
        det_pairs.append((f"efficiency_{suffix}", config.detectors[d].efficiency))
    det_pairs.append(("jitter_sigma_ps", config.detectors[Detector.A].jitter_sigma_ps))
    det_pairs.append(("dark_rate_hz", config.detectors[Detector.A].dark_rate_hz))
    section("detectors", det_pairs)
    section(
        "analyzers",
        [
            ("signal_hwp_rad", config.signal_hwp_rad),
            ("idler_hwp_rad", config.idler_hwp_rad),
            ("mirror_deltas_rad", ",".join(repr(d) for d in config.mirror_deltas_rad)),
            ("beam_block", config.beam_block.value if config.beam_block else "none"),
        ],
    )
    coin_pairs: list[tuple[str, object]] = [("window_ps", config.coincidence.window_ps)]
    for d, suffix in _DETECTOR_SUFFIX.items():
        coin_pairs.append(
            (f"compensation_{suffix}_ps", config.coincidence.compensation_ps.get(d, 0))
        )
    section("coincidence", coin_pairs)
    section(
        "scan",
        [
            ("start_um", config.scan.start_um),
            ("step_um", config.scan.step_um),
            ("n_steps", config.scan.n_steps),
            ("dwell_s", config.scan.dwell_s),
        ],
    )
    section(
        "calibration",
        [
            ("radians_per_micron", config.calibration.radians_per_micron),
            ("origin_offset_rad", config.calibration.origin_offset_rad),
        ],
    )
    section("run", [("master_seed", config.master_seed)])
    return "\n".join(lines)


def load_config(path) -> BenchConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


@dataclass
class RunManifest:
    """What to run, on which config, and where to put the results."""

    config_path: str
    experiment: Experiment
    output_dir: str = "out"
    master_seed: int | None = None
    format_version: int = 1
    angles_deg: tuple[float, ...] = (0.0, 10.0, 20.0, 30.0)
    overshoot_deg: float = 1.0
    detour_collection: float = 1.0 / 7.0

    def __post_init__(self) -> None:
        if self.format_version not in SUPPORTED_FORMAT_VERSIONS:
            raise ConfigError(
                f"unsupported format_version {self.format_version} "
                f"(supported: {SUPPORTED_FORMAT_VERSIONS})"
            )


_MANIFEST_KEYS = (
    "config",
    "experiment",
    "out",
    "master_seed",
    "format_version",
    "angles_deg",
    "overshoot_deg",
    "detour_collection",
)


def parse_manifest(text: str, base_dir: str | Path = ".") -> RunManifest:
    """Parse a run manifest; the config path resolves relative to ``base_dir``."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"manifest parse error: {exc}") from None
    if parser.sections() != ["run"]:
        raise ConfigError("manifest must contain exactly one [run] section")
    items = dict(parser.items("run"))
    for key in items:
        if key not in _MANIFEST_KEYS:
            raise ConfigError(f"unknown manifest key run.{key}")
    if "config" not in items:
        raise ConfigError("run.config is required")
    if "experiment" not in items:
        raise ConfigError("run.experiment is required")
    try:
        experiment = Experiment(items["experiment"])
    except ValueError:
        raise ConfigError(
            f"run.experiment: unknown experiment {items['experiment']!r} "
            f"(expected one of {[e.value for e in Experiment]})"
        ) from None
    sec = _Section("run", items)
    angles_raw = sec.get_str("angles_deg", None)
    if angles_raw is None:
        angles = RunManifest.__dataclass_fields__["angles_deg"].default
    else:
        try:
            angles = tuple(float(v) for v in angles_raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"run.angles_deg: cannot parse {angles_raw!r}") from None
    seed_raw = sec.get_str("master_seed", None)
    return RunManifest(
        config_path=str((Path(base_dir) / items["config"]).resolve()),
        experiment=experiment,
        output_dir=items.get("out", "out"),
        master_seed=int(seed_raw) if seed_raw is not None else None,
        format_version=sec.get_int("format_version", 1),
        angles_deg=angles,
        overshoot_deg=sec.get_float("overshoot_deg", 1.0),
        detour_collection=sec.get_float("detour_collection", 1.0 / 7.0),
    )


def load_manifest(path) -> RunManifest:
    p = Path(path)
    return parse_manifest(p.read_text(encoding="utf-8"), base_dir=p.parent)
