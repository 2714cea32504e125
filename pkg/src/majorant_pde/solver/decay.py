"""Log-log decay fits of sup-norms against the theorem exponents."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

RESOLUTION_CELLS = 6


@dataclass
class DecayFit:
    """Least-squares slope of ``log sup|∇^j u(t)|`` over a time window."""

    j: int
    slope: float
    expected: float
    window: tuple
    n_points: int
    corrected: bool
    tolerance: float

    @property
    def passed(self):
        return bool(abs(self.slope - self.expected) <= self.tolerance)


@dataclass
class DecayResult:
    fits: list

    @property
    def passed(self):
        return all(f.passed for f in self.fits)

    def to_text(self):
        return "\n".join(f"j={f.j} slope={f.slope:.6f} expected={f.expected:.6f} window=({f.window[0]:.4g}, "
                         f"{f.window[1]:.4g}) points={f.n_points} log_corrected={f.corrected} passed={f.passed}"
                         for f in self.fits)


def expected_slope(report, j):
    """``-κ - (j - n)/d`` with ``κ`` from the case report."""
    return -float(report.kappa) - (j - report.n) / float(report.order)


def fit_window(times, T, spacing, order, cells=RESOLUTION_CELLS):
    """Middle decade of the resolved range ``[max(t_1, (cells·h)^d), T]``.

    Raises
    ------
    ValidationError
        If the resolved range spans fewer than two decades.
    """
    lo = max(float(times[0]), (cells * spacing) ** order)
    span = np.log10(T / lo)
    if span < 2.0:
        raise ValidationError(f"resolved time range spans {span:.2f} < 2 decades; refine the grid or extend T")
    mid = 0.5 * (np.log10(lo) + np.log10(T))
    return 10.0 ** (mid - 0.5), 10.0 ** (mid + 0.5)


def fit_slope(t, values):
    """Least-squares slope of ``log values`` against ``log t``."""
    slope, _ = np.polyfit(np.log(t), np.log(values), 1)
    return float(slope)


def verify_decay(run, report, T=None, tol=0.1, window=None, js=None):
    """Fit the final iterate's decay and compare with the theorem exponent.

    Parameters
    ----------
    run : PicardRun
        A converged run.
    report : CaseReport
        Supplies ``κ``, ``n`` and the case; case ``D`` fits
        ``sup|∇^j u| / |log(t/2T)|^{-N/d}``.
    T : float, optional
        Horizon used in the log correction; defaults to the mesh end.
    window : tuple, optional
        Explicit fit window; defaults to :func:`fit_window`.
    js : iterable, optional
        Derivative orders; defaults to ``n..m``.
    """
    if not run.converged:
        raise ValidationError(f"decay fits need a converged run (status {run.status})")
    T = float(run.times[-1] if T is None else T)
    d = run.order
    h = 2.0 * run.box_halfwidth / run.n_grid
    lo, hi = fit_window(run.times, T, h, d) if window is None else window
    mask = (run.times >= lo * (1 - 1e-12)) & (run.times <= hi * (1 + 1e-12))
    if mask.sum() < 5:
        raise ValidationError("fewer than five mesh nodes in the decay window")
    t = run.times[mask]
    corrected = report.case == "D"
    fits = []
    for j in (range(report.n, run.m + 1) if js is None else js):
        vals = run.final_sups[mask, j]
        if corrected:
            vals = vals / np.abs(np.log(t / (2.0 * T))) ** (-report.dim / d)
        fits.append(DecayFit(j=j, slope=fit_slope(t, vals), expected=expected_slope(report, j),
                             window=(float(lo), float(hi)), n_points=int(mask.sum()), corrected=corrected,
                             tolerance=tol))
    result = DecayResult(fits)
    run.decay_fit = result
    return result
