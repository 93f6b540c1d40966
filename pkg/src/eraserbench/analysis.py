"""Fringe fitting and statistical post-processing of scan tables.

The fitter works on plain (position, count) pairs so it stays decoupled
from the scan machinery; callers adapt their row types.  Visibility is
reported from fitted parameters (amplitude over offset) rather than raw
extrema, which suppresses Poisson bias at low counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, stats

from .coincidence import CountTable

__all__ = [
    "FitError",
    "InsufficientStatisticsError",
    "FringeFit",
    "Chi2Result",
    "fit_fringe",
    "fringe_model",
    "distinguishability",
    "poisson_consistency",
    "compare_scans",
]


class FitError(RuntimeError):
    """Fringe fit failed to converge or the data were degenerate."""


class InsufficientStatisticsError(RuntimeError):
    """Too few counts to form the requested estimate."""


@dataclass(frozen=True)
class FringeFit:
    """Least-squares sinusoid offset + amplitude*cos(2 pi x / period + phase)."""

    offset: float
    amplitude: float
    phase_rad: float
    period_um: float
    visibility: float
    residual_rms: float


def fringe_model(fit: FringeFit, positions) -> np.ndarray:
    """Evaluate a fitted fringe at the given positions."""
    x = np.asarray(positions, dtype=float)
    return fit.offset + fit.amplitude * np.cos(
        2.0 * math.pi * x / fit.period_um + fit.phase_rad
    )


def _split_rows(rows: Iterable[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    data = [(float(p), float(c)) for p, c in rows]
    pos = np.array([d[0] for d in data])
    cnt = np.array([d[1] for d in data])
    return pos, cnt


def _dominant_frequency(pos: np.ndarray, cnt: np.ndarray, span: float) -> float:
    """Derivative-free start: scan a grid of trial cycle counts."""
    y = cnt - cnt.mean()
    cycles = np.linspace(0.6, max(3.0, pos.size / 2.0), 800)
    freqs = cycles / span
    phases = np.exp(-2j * math.pi * np.outer(freqs, pos - pos.min()))
    power = np.abs(phases @ y)
    return float(freqs[int(np.argmax(power))])


def fit_fringe(rows: Iterable[tuple[float, float]], period_um: float | None = None) -> FringeFit:
    """Fit one sinusoidal fringe to (position, count) pairs.

    Needs at least 8 points spanning at least one period.  The period is
    seeded from the dominant discrete-frequency component (or taken from
    ``period_um``) and refined together with offset and quadrature
    amplitudes by least squares.  Raises :class:`FitError` on
    non-convergence or degenerate input.
    """
    pos, cnt = _split_rows(rows)
    if pos.size < 8:
        raise FitError(f"need at least 8 points, got {pos.size}")
    span = float(pos.max() - pos.min())
    if span <= 0:
        raise FitError("degenerate position span")
    f0 = 1.0 / float(period_um) if period_um else _dominant_frequency(pos, cnt, span)

    def design(freq: float) -> np.ndarray:
        w = 2.0 * math.pi * freq * pos
        return np.column_stack([np.ones_like(pos), np.cos(w), np.sin(w)])

    coef, *_ = np.linalg.lstsq(design(f0), cnt, rcond=None)

    def residual(params: np.ndarray) -> np.ndarray:
        c, a, b, f = params
        w = 2.0 * math.pi * f * pos
        return c + a * np.cos(w) + b * np.sin(w) - cnt

    result = optimize.least_squares(
        residual,
        x0=np.array([coef[0], coef[1], coef[2], f0]),
        method="lm",
        xtol=1e-9,
        ftol=1e-9,
        max_nfev=2000,
    )
    if not result.success:
        raise FitError(f"fringe fit did not converge: {result.message}")
    c, a, b, f = result.x
    f = abs(float(f))
    if f <= 0:
        raise FitError("fit collapsed to zero frequency")
    period = 1.0 / f
    amplitude = float(math.hypot(a, b))
    if span < period * (1.0 - 1e-9) and amplitude > 1e-9 * max(abs(c), 1.0):
        raise FitError(
            f"scan span {span:.4g} um covers less than one fitted period {period:.4g} um"
        )
    if not c > 0:
        raise FitError(f"nonpositive fitted offset {c:.4g}")
    phase = math.atan2(-b, a)
    visibility = min(max(amplitude / c, 0.0), 1.0)
    rms = float(np.sqrt(np.mean(result.fun**2)))
    return FringeFit(
        offset=float(c),
        amplitude=amplitude,
        phase_rad=phase,
        period_um=period,
        visibility=visibility,
        residual_rms=rms,
    )


def distinguishability(table: CountTable) -> float:
    """Which-way estimator |N_AB - N_A'B| / (N_AB + N_A'B).

    Expects counts taken with the idler analyzer in the HV basis; the
    imbalance of the two idler ports conditioned on one signal port is
    the fraction of heralds that reveal the path.
    """
    denom = table.n_ab + table.n_apb
    if denom == 0:
        raise InsufficientStatisticsError("no coincidences in the heralded ports")
    return abs(table.n_ab - table.n_apb) / denom


def poisson_consistency(rows: Iterable[tuple[float, float]], detrend: bool = True) -> float:
    """Ratio of the (optionally detrended) count scatter to sqrt(mean count).

    1.0 means the scatter is pure counting noise.  With ``detrend`` the
    fitted sinusoid is subtracted first; if no fringe is resolvable the
    detrend falls back to the mean.
    """
    pos, cnt = _split_rows(rows)
    if pos.size < 10:
        raise InsufficientStatisticsError(f"need at least 10 points, got {pos.size}")
    mean = cnt.mean()
    if not mean > 0:
        raise InsufficientStatisticsError("mean count must be positive")
    if detrend:
        try:
            fit = fit_fringe(zip(pos, cnt))
            residual = cnt - fringe_model(fit, pos)
        except FitError:
            residual = cnt - mean
    else:
        residual = cnt - mean
    return float(np.std(residual) / math.sqrt(mean))


@dataclass(frozen=True)
class Chi2Result:
    chi2: float
    dof: int
    p_value: float


def compare_scans(
    positions_a: Sequence[float],
    counts_a,
    positions_b: Sequence[float],
    counts_b,
) -> Chi2Result:
    """Pearson chi-square between two scans with Poisson variance.

    Counts may be one column or a (points x channels) table.  Each term
    is (a-b)^2 / (a+b), the two-sample Poisson comparison; points where
    both counts are zero carry no information and are skipped.
    """
    pa = np.asarray(positions_a, dtype=float)
    pb = np.asarray(positions_b, dtype=float)
    ca = np.asarray(counts_a, dtype=float)
    cb = np.asarray(counts_b, dtype=float)
    if pa.shape != pb.shape or not np.allclose(pa, pb):
        raise ValueError("scan position grids differ")
    if ca.shape != cb.shape or ca.shape[0] != pa.shape[0]:
        raise ValueError("scan count tables differ in shape")
    num = (ca - cb) ** 2
    den = ca + cb
    mask = den > 0
    dof = int(mask.sum())
    if dof == 0:
        return Chi2Result(chi2=0.0, dof=0, p_value=1.0)
    chi2 = float((num[mask] / den[mask]).sum())
    return Chi2Result(chi2=chi2, dof=dof, p_value=float(stats.chi2.sf(chi2, dof)))
