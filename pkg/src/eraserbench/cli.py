"""Batch command-line front end.

Subcommands::

    run <manifest>       execute an experiment manifest, write CSV/JSON
    analyze <scan.csv>   fit an existing scan table, write a fit report
    report <dir>         summarize results: PASS/FAIL lines plus figures
    validate <config>    check a bench config without running anything

Exit codes: 0 success, 1 usage error, 2 runtime failure.  Outputs are
deterministic: equal manifests produce byte-identical files, and every
CSV carries its seed in ``#`` header comments.  The output directory
resolves as ``--out`` > ``ERASERBENCH_OUT`` > the manifest entry.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import analysis
from .analysis import FitError, InsufficientStatisticsError, fit_fringe
from .bench_config import (
    BenchConfig,
    ConfigError,
    Experiment,
    RunManifest,
    load_config,
    load_manifest,
)
from .event_timeline import run_interval, write_streams
from .fileio import read_scan_csv, write_fit_report_csv, write_json, write_scan_csv, read_json
from .photon_source import SourceKind, prepare_state
from .runner import (
    DelayMode,
    ScanRow,
    delayed_config,
    derive_seed,
    fringe_points,
    run_beam_block,
    run_chsh,
    run_fringe_scan,
    run_overshoot_study,
    run_rotation_invariance,
    scan_counts,
    scan_positions,
)

__all__ = ["main"]

OUTPUT_DIR_ENV = "ERASERBENCH_OUT"

#: Report thresholds for erasure-scan visibility at the default source
#: coherence: measured tolerance and the narrower reference band.
VISIBILITY_TOLERANCE = (0.71, 0.77)
VISIBILITY_TARGET_BAND = (0.72, 0.75)
WHICH_WAY_VISIBILITY_MAX = 0.05


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="eraserbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment manifest")
    p_run.add_argument("manifest", help="path to a run manifest")
    p_run.add_argument("--seed", type=int, default=None, help="override the master seed")
    p_run.add_argument("--out", default=None, help="override the output directory")
    p_run.add_argument("--threads", type=int, default=1, help="worker threads for scan points")
    p_run.add_argument(
        "--dump-events",
        action="store_true",
        help="also write per-point detector event streams (scan experiments)",
    )

    p_an = sub.add_parser("analyze", help="fit fringes in an existing scan CSV")
    p_an.add_argument("scan_csv", help="scan table produced by `run`")
    p_an.add_argument("--out", default=None, help="fit report path (default: <stem>_fits.csv)")

    p_rep = sub.add_parser("report", help="summarize a results directory")
    p_rep.add_argument("results_dir", help="directory of scan CSVs and result JSONs")

    p_val = sub.add_parser("validate", help="check a bench config")
    p_val.add_argument("config", help="path to a bench config")
    return parser


def _wrap_phase(delta: float) -> float:
    return (delta + math.pi) % (2.0 * math.pi) - math.pi


def _visibility_sigma(fit, n_points: int) -> float:
    # Poisson-noise propagation for a fitted sinusoid: per-point variance
    # is the offset, amplitude and offset variances scale as 2/N and 1/N.
    if fit.offset <= 0 or n_points <= 0:
        return float("inf")
    return math.sqrt((2.0 + fit.visibility**2) / (n_points * fit.offset))


def _scan_metadata(manifest: RunManifest, config: BenchConfig, **extra) -> dict:
    meta = {
        "format_version": manifest.format_version,
        "experiment": manifest.experiment.value,
        "master_seed": config.master_seed,
        "config": manifest.config_path,
        "source_kind": config.source.kind.value,
    }
    meta.update(extra)
    return meta


def _dump_point_events(config: BenchConfig, out_dir: Path, prefix: str) -> None:
    state = prepare_state(config.source)
    scan = config.scan
    from .optics import actuator_to_phase  # local import avoids a cycle at module load

    for i in range(scan.n_steps):
        pos = scan.start_um + i * scan.step_um
        phi = actuator_to_phase(pos, config.calibration)
        seed = derive_seed(config.master_seed, "point", i)
        streams = run_interval(state, config, scan.dwell_s, seed, delta_phi_rad=phi)
        write_streams(out_dir / f"{prefix}_events_{i:03d}.csv", streams)


def _fit_or_none(rows: list[ScanRow], channel: str):
    try:
        return fit_fringe(fringe_points(rows, channel))
    except FitError:
        return None


def _cmd_run(args) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out or os.environ.get(OUTPUT_DIR_ENV) or manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = load_config(manifest.config_path)
    if args.seed is not None:
        config.master_seed = int(args.seed)
    elif manifest.master_seed is not None:
        config.master_seed = manifest.master_seed
    threads = max(1, args.threads)

    exp = manifest.experiment
    if exp is Experiment.FRINGE:
        rows = run_fringe_scan(config, n_workers=threads)
        analyzer = "erasure" if abs(config.idler_hwp_rad) > 1e-9 else "which_way"
        write_scan_csv(
            out_dir / "scan.csv",
            rows,
            _scan_metadata(manifest, config, analyzer=analyzer),
        )
        if args.dump_events:
            _dump_point_events(config, out_dir, "scan")
    elif exp is Experiment.DELAY_COMPARE:
        _run_delay_compare(manifest, config, out_dir, threads)
    elif exp is Experiment.CHSH:
        result = run_chsh(config)
        write_json(
            out_dir / "chsh.json",
            {
                "s_value": result.s_value,
                "sigma_s": result.sigma_s,
                "e_values": list(result.e_values),
                "n_per_setting": list(result.n_per_setting),
                "setting_pairs_deg": [
                    [math.degrees(a), math.degrees(b)] for a, b in result.setting_pairs_rad
                ],
                "source_kind": config.source.kind.value,
                "master_seed": config.master_seed,
            },
        )
    elif exp is Experiment.BEAM_BLOCK:
        result = run_beam_block(config)
        expected = 0.5 if config.source.kind is SourceKind.MIXED_DIAGONAL else 1.0
        ratio = result.ratio
        write_json(
            out_dir / "beam_block.json",
            {
                "n_hh_blocked": result.n_hh_blocked,
                "n_hh_unblocked": result.n_hh_unblocked,
                "ratio": ratio,
                "expected_ratio": expected,
                "pass": abs(ratio - expected) <= 0.05,
                "source_kind": config.source.kind.value,
                "master_seed": config.master_seed,
            },
        )
    elif exp is Experiment.ROTATION:
        _run_rotation(manifest, config, out_dir)
    elif exp is Experiment.OVERSHOOT:
        _run_overshoot(manifest, config, out_dir)
    else:  # pragma: no cover
        raise ConfigError(f"unhandled experiment {exp!r}")
    return 0


def _run_delay_compare(manifest: RunManifest, config: BenchConfig, out_dir: Path, threads: int) -> None:
    rows_by_mode: dict[str, list[ScanRow]] = {}
    delays: dict[str, int] = {}
    rows_by_mode["none"] = run_fringe_scan(config, n_workers=threads)
    delays["none"] = 0
    for mode in (DelayMode.FREE_SPACE_2M, DelayMode.FIBER_5M):
        cfg, delay_ps = delayed_config(
            config, mode, detour_collection=manifest.detour_collection, compensate=True
        )
        rows_by_mode[mode.value] = run_fringe_scan(cfg, n_workers=threads)
        delays[mode.value] = delay_ps
    results: dict = {"delay_ps": delays, "visibility": {}, "visibility_sigma": {}, "p_value_vs_none": {}}
    fits = {}
    for mode, rows in rows_by_mode.items():
        write_scan_csv(
            out_dir / f"scan_{mode}.csv",
            rows,
            _scan_metadata(manifest, config, analyzer="erasure", delay_mode=mode),
        )
        fit = _fit_or_none(rows, "n_ab")
        fits[mode] = fit
        if fit is not None:
            results["visibility"][mode] = fit.visibility
            results["visibility_sigma"][mode] = _visibility_sigma(fit, len(rows))
    base_rows = rows_by_mode["none"]
    comparable = abs(manifest.detour_collection - 1.0) < 1e-12
    for mode in (DelayMode.FREE_SPACE_2M.value, DelayMode.FIBER_5M.value):
        if mode == DelayMode.FREE_SPACE_2M.value and not comparable:
            continue  # count scales differ by design; compare visibilities only
        chi = analysis.compare_scans(
            scan_positions(base_rows),
            scan_counts(base_rows),
            scan_positions(rows_by_mode[mode]),
            scan_counts(rows_by_mode[mode]),
        )
        results["p_value_vs_none"][mode] = chi.p_value
    vis = results["visibility"]
    sig = results["visibility_sigma"]
    within = True
    for mode, v in vis.items():
        if mode == "none":
            continue
        spread = abs(v - vis.get("none", v))
        limit = 3.0 * math.hypot(sig.get(mode, 0.0), sig.get("none", 0.0))
        within = within and spread <= limit
    results["pass"] = within and all(p > 0.01 for p in results["p_value_vs_none"].values())
    write_json(out_dir / "delay_results.json", results)


def _run_rotation(manifest: RunManifest, config: BenchConfig, out_dir: Path) -> None:
    angles_rad = [math.radians(a) for a in manifest.angles_deg]
    scans = run_rotation_invariance(config, angles_rad)
    entries = []
    for item, angle_deg in zip(scans, manifest.angles_deg):
        tag = f"{angle_deg:g}".replace(".", "p")
        write_scan_csv(
            out_dir / f"rotation_{tag}_erasure.csv",
            item.erasure,
            _scan_metadata(manifest, config, analyzer="erasure", rotation_deg=angle_deg),
        )
        write_scan_csv(
            out_dir / f"rotation_{tag}_whichway.csv",
            item.which_way,
            _scan_metadata(manifest, config, analyzer="which_way", rotation_deg=angle_deg),
        )
        fit = _fit_or_none(item.erasure, "n_ab")
        entries.append(
            {
                "rotation_deg": angle_deg,
                "erasure_visibility": None if fit is None else fit.visibility,
                "visibility_sigma": None
                if fit is None
                else _visibility_sigma(fit, len(item.erasure)),
            }
        )
    vis = [e["erasure_visibility"] for e in entries if e["erasure_visibility"] is not None]
    sig = [e["visibility_sigma"] for e in entries if e["erasure_visibility"] is not None]
    agree = True
    for i in range(len(vis)):
        for j in range(i + 1, len(vis)):
            agree = agree and abs(vis[i] - vis[j]) <= 3.0 * math.hypot(sig[i], sig[j])
    write_json(out_dir / "rotation.json", {"angles": entries, "pass": agree})


def _run_overshoot(manifest: RunManifest, config: BenchConfig, out_dir: Path) -> None:
    from dataclasses import replace

    from .bench_config import ERASURE_HWP_RAD

    epsilon_rad = math.radians(manifest.overshoot_deg)
    which_way = run_overshoot_study(config, epsilon_rad)
    erasure_cfg = replace(
        config, signal_hwp_rad=ERASURE_HWP_RAD, idler_hwp_rad=ERASURE_HWP_RAD
    )
    erasure = run_fringe_scan(erasure_cfg)
    write_scan_csv(
        out_dir / "overshoot_whichway.csv",
        which_way,
        _scan_metadata(manifest, config, analyzer="overshoot", overshoot_deg=manifest.overshoot_deg),
    )
    write_scan_csv(
        out_dir / "overshoot_erasure.csv",
        erasure,
        _scan_metadata(manifest, config, analyzer="erasure"),
    )
    fit_ww = _fit_or_none(which_way, "n_ab")
    fit_er = _fit_or_none(erasure, "n_ab")
    payload: dict = {"overshoot_deg": manifest.overshoot_deg}
    if fit_ww is not None and fit_er is not None:
        payload["residual_visibility"] = fit_ww.visibility
        payload["erasure_visibility"] = fit_er.visibility
        payload["phase_diff_rad"] = _wrap_phase(fit_ww.phase_rad - fit_er.phase_rad)
    write_json(out_dir / "overshoot.json", payload)


def _cmd_analyze(args) -> int:
    rows, metadata = read_scan_csv(args.scan_csv)
    fits: list[tuple[str, object]] = []
    print(f"scan: {args.scan_csv} ({len(rows)} points)")
    for channel, column in (("n_AB", "n_ab"), ("n_ApB", "n_apb")):
        try:
            fit = fit_fringe(fringe_points(rows, column))
        except FitError as exc:
            print(f"  {channel}: fit failed: {exc}")
            continue
        fits.append((channel, fit))
        print(
            f"  {channel}: offset={fit.offset:.2f} amplitude={fit.amplitude:.2f} "
            f"period={fit.period_um:.3f} um phase={fit.phase_rad:+.3f} rad "
            f"visibility={fit.visibility:.4f}"
        )
    try:
        ratio = analysis.poisson_consistency(fringe_points(rows, "n_ab"))
        print(f"  detrended scatter / sqrt(mean): {ratio:.3f}")
    except InsufficientStatisticsError:
        pass
    if metadata:
        seed = metadata.get("master_seed")
        if seed is not None:
            print(f"  master_seed: {seed}")
    out = Path(args.out) if args.out else Path(args.scan_csv).with_name(
        Path(args.scan_csv).stem + "_fits.csv"
    )
    write_fit_report_csv(out, fits)
    print(f"  fit report: {out}")
    return 0


def _report_scan(path: Path, lines: list[str]) -> None:
    from .plots import render_scan_figure

    rows, metadata = read_scan_csv(path)
    analyzer = metadata.get("analyzer", "")
    fit_ab = _fit_or_none(rows, "n_ab")
    fit_apb = _fit_or_none(rows, "n_apb")
    png = path.with_suffix(".png")
    render_scan_figure(
        scan_positions(rows),
        [r.counts.n_ab for r in rows],
        [r.counts.n_apb for r in rows],
        png,
        fit_ab=fit_ab,
        fit_apb=fit_apb,
        title=path.name,
    )
    if fit_ab is None:
        lines.append(f"{path.name}: n_AB fringe fit failed - FAIL")
        return
    v = fit_ab.visibility
    if analyzer == "erasure":
        lo, hi = VISIBILITY_TOLERANCE
        verdict = "PASS" if lo <= v <= hi else "FAIL"
        lines.append(
            f"{path.name}: n_AB visibility {v:.4f} in tolerance [{lo}, {hi}] "
            f"(target band [{VISIBILITY_TARGET_BAND[0]}, {VISIBILITY_TARGET_BAND[1]}]) - {verdict}"
        )
    elif analyzer == "which_way":
        verdict = "PASS" if v < WHICH_WAY_VISIBILITY_MAX else "FAIL"
        lines.append(
            f"{path.name}: n_AB visibility {v:.4f} below {WHICH_WAY_VISIBILITY_MAX} - {verdict}"
        )
    else:
        lines.append(f"{path.name}: n_AB visibility {v:.4f} (informational)")
    lines.append(f"{path.name}: figure written to {png.name}")


def _cmd_report(args) -> int:
    root = Path(args.results_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"results directory not found: {root}")
    lines: list[str] = []
    for path in sorted(root.glob("*.csv")):
        try:
            _report_scan(path, lines)
        except ValueError:
            continue  # not a scan table (e.g. a fit report)
    chsh_path = root / "chsh.json"
    if chsh_path.exists():
        data = read_json(chsh_path)
        s, sigma = data["s_value"], data["sigma_s"]
        nonclassical = s - 2.0 > 4.0 * sigma
        verdict = "PASS" if nonclassical else "FAIL"
        lines.append(
            f"chsh.json: S = {s:.4f} +/- {sigma:.4f} "
            f"(classical bound 2 exceeded by {(s - 2.0) / sigma if sigma else 0.0:.1f} sigma) - {verdict}"
        )
    bb_path = root / "beam_block.json"
    if bb_path.exists():
        data = read_json(bb_path)
        verdict = "PASS" if data.get("pass") else "FAIL"
        lines.append(
            f"beam_block.json: blocked/unblocked = {data['ratio']:.4f} "
            f"(expected {data['expected_ratio']:.2f} +/- 0.05, source {data['source_kind']}) - {verdict}"
        )
    for name in ("delay_results.json", "rotation.json"):
        path = root / name
        if path.exists():
            data = read_json(path)
            verdict = "PASS" if data.get("pass") else "FAIL"
            lines.append(f"{name}: consistency checks - {verdict}")
    overshoot_path = root / "overshoot.json"
    if overshoot_path.exists():
        data = read_json(overshoot_path)
        if "phase_diff_rad" in data:
            lines.append(
                f"overshoot.json: residual visibility {data['residual_visibility']:.4f}, "
                f"phase offset {data['phase_diff_rad']:+.3f} rad vs erasure fringe"
            )
    if not lines:
        lines.append("no recognizable results found")
    text = "\n".join(lines) + "\n"
    (root / "summary.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def _cmd_validate(args) -> int:
    load_config(args.config)
    print(f"{args.config}: OK")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "validate":
            return _cmd_validate(args)
    except (
        ConfigError,
        FitError,
        InsufficientStatisticsError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
