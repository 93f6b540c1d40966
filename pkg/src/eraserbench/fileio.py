"""Delimited file formats: scan tables, fit reports, results JSON.

Scan CSVs carry their provenance (seed, experiment, config) in ``#``
comment lines above a fixed header row.  Nothing here writes wall-clock
time or other hidden state, so equal runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from .analysis import FringeFit
from .coincidence import CountTable
from .runner import ScanRow

__all__ = [
    "SCAN_CSV_HEADER",
    "write_scan_csv",
    "read_scan_csv",
    "write_fit_report_csv",
    "write_json",
    "read_json",
]

SCAN_CSV_HEADER = (
    "actuator_um,delta_phi_rad,n_AB,n_ApB,n_ABp,n_ApBp,"
    "singles_A,singles_Ap,singles_B,singles_Bp,dwell_s"
)

FIT_REPORT_HEADER = "channel,offset,amplitude,phase_rad,period_um,visibility,residual_rms"


def _fmt(value: float) -> str:
    return repr(float(value))


def write_scan_csv(path, rows: list[ScanRow], metadata: dict | None = None) -> None:
    lines: list[str] = []
    for key in sorted(metadata or {}):
        lines.append(f"# {key} = {metadata[key]}")
    lines.append(SCAN_CSV_HEADER)
    for r in rows:
        c = r.counts
        lines.append(
            ",".join(
                [
                    _fmt(r.actuator_um),
                    _fmt(r.delta_phi_rad),
                    str(c.n_ab),
                    str(c.n_apb),
                    str(c.n_abp),
                    str(c.n_apbp),
                    str(c.singles_a),
                    str(c.singles_ap),
                    str(c.singles_b),
                    str(c.singles_bp),
                    _fmt(c.interval_s),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_scan_csv(path) -> tuple[list[ScanRow], dict[str, str]]:
    """Inverse of :func:`write_scan_csv`; returns (rows, metadata)."""
    metadata: dict[str, str] = {}
    rows: list[ScanRow] = []
    header_seen = False
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                metadata[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line != SCAN_CSV_HEADER:
                raise ValueError(f"unexpected scan CSV header on line {lineno}: {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 11:
            raise ValueError(f"expected 11 fields on line {lineno}, got {len(parts)}")
        rows.append(
            ScanRow(
                actuator_um=float(parts[0]),
                delta_phi_rad=float(parts[1]),
                counts=CountTable(
                    n_ab=int(parts[2]),
                    n_apb=int(parts[3]),
                    n_abp=int(parts[4]),
                    n_apbp=int(parts[5]),
                    singles_a=int(parts[6]),
                    singles_ap=int(parts[7]),
                    singles_b=int(parts[8]),
                    singles_bp=int(parts[9]),
                    interval_s=float(parts[10]),
                ),
            )
        )
    if not header_seen:
        raise ValueError("not a scan CSV: header row missing")
    return rows, metadata


def write_fit_report_csv(path, fits: list[tuple[str, FringeFit]]) -> None:
    lines = [FIT_REPORT_HEADER]
    for channel, f in fits:
        lines.append(
            ",".join(
                [
                    channel,
                    _fmt(f.offset),
                    _fmt(f.amplitude),
                    _fmt(f.phase_rad),
                    _fmt(f.period_um),
                    _fmt(f.visibility),
                    _fmt(f.residual_rms),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, obj) -> None:
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
