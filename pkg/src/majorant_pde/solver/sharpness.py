"""Amplitude sweeps locating the empirical existence threshold.

The sweep is exploratory: a bracket ``[γ_lo, γ_hi]`` where the Picard
iteration converges at ``γ_lo`` and fails (divergence guard or iteration
budget) at ``γ_hi`` is evidence about the threshold, not a verification.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import BracketError, ValidationError
from ..kernels import KernelSpec
from ..spaces import Field, log_critical_field, power_law_field
from ..structure import preset
from .discretization import Discretization
from .picard import picard_solve

PROFILES = ("constant", "power", "log", "bump", "gradient-power")


def initial_field(kind, amplitude, box_halfwidth, n, dim=1, exponent=None, log_exponent=None, width=0.05):
    """Initial data of a named shape scaled by ``amplitude``.

    ``power`` is ``γ|x|^{-exponent}``, ``log`` is
    ``γ|x|^{-N} log(e + 1/|x|)^{-log_exponent}``, ``bump`` a Gaussian of
    width ``width`` and ``gradient-power`` is ``γ|x|^{1-a}/(1-a)`` with
    ``a = exponent``, whose gradient has size ``γ|x|^{-a}``.
    """
    if kind == "constant":
        return Field.constant(amplitude, box_halfwidth, n, dim)
    if kind == "power":
        if exponent is None:
            raise ValidationError("power profile needs an exponent")
        return power_law_field(amplitude, exponent, box_halfwidth, n, dim)
    if kind == "log":
        return log_critical_field(amplitude, box_halfwidth, n, dim, log_exponent=log_exponent or 1.5)
    if kind == "bump":
        if dim == 1:
            return Field.from_function(lambda x: amplitude * np.exp(-(x / width) ** 2), box_halfwidth, n, dim,
                                       average=True)
        return Field.from_function(lambda x, y: amplitude * np.exp(-(x ** 2 + y ** 2) / width ** 2),
                                   box_halfwidth, n, dim, average=True)
    if kind == "gradient-power":
        if exponent is None or not 0 < exponent < 1:
            raise ValidationError("gradient-power profile needs an exponent in (0, 1)")
        a = float(exponent)
        if dim == 1:
            return Field.from_function(lambda x: amplitude * np.abs(x) ** (1 - a) / (1 - a), box_halfwidth, n, dim,
                                       average=True)
        return Field.from_function(lambda x, y: amplitude * np.hypot(x, y) ** (1 - a) / (1 - a), box_halfwidth, n,
                                   dim, average=True)
    raise ValidationError(f"unknown initial profile {kind!r}; choose from {PROFILES}")


def gradient_power_norm(amplitude, exponent, box_halfwidth, n, dim=1):
    """Cell averages of ``|∇φ| = γ|x|^{-a}`` for the ``gradient-power`` profile."""
    return power_law_field(amplitude, exponent, box_halfwidth, n, dim)


@dataclass
class SweepRecord:
    gamma: float
    status: str
    iters: int
    final_sup: float

    @property
    def exists(self):
        return self.status == "converged"


@dataclass
class ThresholdBracket:
    """Converging amplitude ``lower`` and failing amplitude ``upper``."""

    lower: float
    upper: float
    records: list = dc_field(default_factory=list)
    label: str = "evidence"

    @property
    def midpoint(self):
        return 0.5 * (self.lower + self.upper)

    def contains(self, value, rel=0.0):
        return self.lower * (1 - rel) <= value <= self.upper * (1 + rel)


def bisect_threshold(solve_at, gamma_range, bisection_steps=10, workers=1):
    """Shrink ``[γ_lo, γ_hi]`` with ``workers`` interior probes per round.

    ``solve_at(γ)`` returns a :class:`SweepRecord`.  Monotonicity in ``γ`` is
    assumed; the bracket keeps the largest converging and the smallest
    failing probe.
    """
    lo, hi = (float(v) for v in gamma_range)
    if not 0 <= lo < hi:
        raise ValidationError("gamma range must satisfy 0 <= lo < hi")
    workers = max(1, int(workers))
    records = []

    def evaluate(gammas):
        if workers == 1 or len(gammas) == 1:
            return [solve_at(g) for g in gammas]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(solve_at, gammas))

    ends = evaluate([lo, hi])
    records.extend(ends)
    if not ends[0].exists or ends[1].exists:
        raise BracketError(f"no bracket in [{lo}, {hi}]: statuses {ends[0].status}/{ends[1].status}", records)
    for _ in range(int(bisection_steps)):
        probes = list(np.linspace(lo, hi, workers + 2)[1:-1])
        out = evaluate(probes)
        records.extend(out)
        for rec in out:
            if rec.exists and rec.gamma > lo:
                lo = rec.gamma
        for rec in out:
            if not rec.exists and lo < rec.gamma < hi:
                hi = rec.gamma
    records.sort(key=lambda r: r.gamma)
    return ThresholdBracket(lower=lo, upper=hi, records=records)


def sharpness_experiment(family, params, gamma_range, bisection_steps=10, workers=1):
    """Bisect the amplitude of the family's critical profile.

    Parameters
    ----------
    family : str
        Preset tag (``SP``, ``VHJ``, ``gCD``, ``HG``).
    params : dict
        ``p``, ``dim`` (1), ``order`` (2), ``ell``, ``n_ref``, ``profile``
        (default ``power`` when ``r_0 > 1``, ``log`` when ``r_0 = 1``),
        ``exponent``, ``box`` (20), ``n`` (1024), ``T`` (1), ``max_iter``
        (200), ``tol`` (1e-8) and the mesh options ``t_min_ratio``,
        ``growth``, ``max_step_ratio``.
    gamma_range : (float, float)
    bisection_steps : int
    workers : int
        Concurrent runs per round.
    """
    dim = int(params.get("dim", 1))
    order = float(params.get("order", 2.0))
    pr = preset(family, dim=dim, order=order, p=params.get("p", 2), ell=params.get("ell", 1),
                n=params.get("n_ref"))
    spec = pr.spec
    r0 = pr.derived.get("r_0")
    profile = params.get("profile")
    if profile is None:
        profile = "log" if r0 == 1 else "power"
    exponent = params.get("exponent")
    if profile == "power" and exponent is None:
        if r0 is None or not r0 > 1 or r0 == float("inf"):
            raise ValidationError("power profile needs r_0 > 1 or an explicit exponent")
        exponent = dim / float(r0)
    kernel = KernelSpec(dim=dim, order=order, decay_exponent=float(params.get("decay_exponent", 1.0)))
    T = float(params.get("T", 1.0))
    box = float(params.get("box", 20.0))
    n = int(params.get("n", 1024))
    disc = Discretization.build(box, n, T, dim, float(params.get("t_min_ratio", 1e-6)),
                                float(params.get("growth", 1.1)), float(params.get("max_step_ratio", 0.01)))
    max_iter = int(params.get("max_iter", 200))
    tol = float(params.get("tol", 1e-8))

    def solve_at(gamma):
        phi = initial_field(profile, gamma, box, n, dim, exponent=exponent,
                            log_exponent=params.get("log_exponent", dim / order + 1))
        run = picard_solve(kernel, spec, phi, T, disc, max_iter=max_iter, tol=tol)
        sup = float(np.max(run.sup_history[-1][:, 0]))
        return SweepRecord(gamma=float(gamma), status=run.status, iters=run.iterations, final_sup=sup)

    return bisect_threshold(solve_at, gamma_range, bisection_steps, workers)
