"""Explicit supersolutions and grid checks of the a-priori-bound hypotheses.

Four constructions are provided, one per case of the structure condition:

* ``A``: ``U = 2c_* S_K(t)(|∇^nφ| + L)``
* ``B``: ``U = 2c_* S_K(t)(|φ| + L)``
* ``C``: ``U = 2c_* (S_K(t)(|φ| + L)^q)^{1/q}``
* ``D``: ``U = 2c_* T^{-N/d} Φ_M^{-1}(S_K(t)Φ_M(T^{N/d}|φ|) + Φ_M(L))``

``S_K`` is the positive cell-integral discretization of the majorant
smoothing, which keeps Jensen's inequality exact on the grid.  The floor
``L`` solves ``c_* L min_j T^{-(j-n)/d} = ε`` (with ``N + j - n`` in place of
``j - n`` for kind ``D``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import TruncationWarning, ValidationError
from ..majorant import apply_smoothing, truncation_mass
from ..spaces import Field, OrliczSpec, orlicz_phi, orlicz_phi_inverse
from ..spectral import derivative_tensor, tensor_norm, wavenumber_norm
from .discretization import product_weights

KINDS = ("A", "B", "C", "D")


@dataclass
class HypothesisCheck:
    """Worst measured-lhs / required-rhs ratio of one hypothesis."""

    name: str
    ratio: float
    node: int
    location: tuple
    j: int | None = None

    @property
    def passed(self):
        return bool(np.isfinite(self.ratio) and self.ratio <= 1.0)


@dataclass
class Supersolution:
    """Envelope ``U`` on the grid at every mesh node, with its hypothesis report."""

    kind: str
    times: np.ndarray
    U: np.ndarray
    box_halfwidth: float
    dim: int
    reference_order: int
    constants: dict
    hypothesis_report: dict = dc_field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.hypothesis_report.values())

    @property
    def max_ratio(self):
        return max((c.ratio for c in self.hypothesis_report.values()), default=0.0)

    def scaled(self, factor):
        """Copy with ``U`` multiplied by ``factor`` (hypotheses not re-measured)."""
        return Supersolution(self.kind, self.times, self.U * factor, self.box_halfwidth, self.dim,
                             self.reference_order, dict(self.constants, scale=factor), {})

    def check_mesh(self, times, field):
        if self.U.shape[0] != len(times) or not np.allclose(self.times, times, rtol=1e-12, atol=0):
            raise ValidationError("supersolution and run use different time meshes")
        if self.U.shape[1:] != field.values.shape or abs(self.box_halfwidth - field.box_halfwidth) > 1e-12:
            raise ValidationError("supersolution and run use different grids")

    def state_bound(self, spec, order):
        """``max_{i, j ∈ J} t_i^{-(j-n)/d} sup U(t_i)``."""
        n = self.reference_order
        sup = np.max(self.U.reshape(len(self.times), -1), axis=1)
        return float(max(np.max(self.times ** (-(j - n) / order) * sup) for j in spec.J))

    def report_text(self):
        lines = [f"kind: {self.kind}"]
        lines += [f"{k}: {v:.10g}" if isinstance(v, float) else f"{k}: {v}" for k, v in self.constants.items()]
        for name, c in self.hypothesis_report.items():
            lines.append(f"{name}: ratio={c.ratio:.6g} node={c.node} j={c.j} passed={c.passed}")
        return "\n".join(lines)


def _smooth(K, values, field, t):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        out = apply_smoothing(K, field.with_values(values), t, method="cell").values
    return np.maximum(out, 0.0)


def _data_derivative(phi, n, nphi):
    if nphi is not None:
        vals = np.abs(nphi.values if isinstance(nphi, Field) else np.asarray(nphi, dtype=float))
        if vals.shape != phi.values.shape:
            raise ValidationError("supplied |∇^n φ| does not match the grid")
        return vals
    if n == 0:
        return np.abs(phi.values)
    return tensor_norm(derivative_tensor(phi, np.fft.fftn(phi.values), n), phi.dim, n)


def _floor_L(kind, eps, c_star, T, d, N, n, m):
    exps = [(N + j - n) / d if kind == "D" else (j - n) / d for j in range(n, m + 1)]
    return eps / (c_star * min(T ** (-e) for e in exps))


def _envelope(kind, K, data, field, times, c_star, L, T, q, orlicz, d):
    N = field.dim
    U = np.empty((len(times),) + data.shape)
    if kind in ("A", "B"):
        base = data + L
        for i, t in enumerate(times):
            U[i] = 2 * c_star * _smooth(K, base, field, t)
    elif kind == "C":
        base = (data + L) ** q
        for i, t in enumerate(times):
            U[i] = 2 * c_star * _smooth(K, base, field, t) ** (1.0 / q)
    else:
        beta, M = orlicz.beta, orlicz.M
        lift = T ** (N / d)
        base = orlicz_phi(lift * data, beta, M)
        floor = float(orlicz_phi(L, beta, M))
        for i, t in enumerate(times):
            V = _smooth(K, base, field, t) + floor
            U[i] = 2 * c_star / lift * orlicz_phi_inverse(V, beta, M)
    return U


def _worst(ratio):
    idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return float(ratio[idx]), idx


def _check_nodes(M, count):
    if count >= M:
        return list(range(M))
    picks = np.unique(np.round(np.geomspace(1, M, count)).astype(int) - 1)
    return sorted(set(picks.tolist()) | {M - 1})


def _duhamel_check(K, U, times, field, spec, c_star, d, check_nodes):
    """Worst ratio of the nonlinear Duhamel bound over check nodes and ``j ∈ {n..m}``.

    The time integral uses product weights for ``(t-s)^{-(ℓ+j)/d} s^b`` with
    ``b = A - (⟨p⟩_n - n)/d`` against hat functions on ``0, t_1, ..., t``;
    ``S_K(t - s)`` acts through its Fourier symbol.
    """
    n, m = spec.n, spec.m
    p_abs = float(spec.p_abs)
    b = float(spec.A) - float(spec.p_bracket() - n) / d
    xi = wavenumber_norm(field)
    power = U ** p_abs
    out = []
    for j in range(n, m + 1):
        a = (spec.ell + j) / d
        worst = (-np.inf, 0, ())
        for i in check_nodes:
            t = times[i]
            nodes = np.concatenate([[0.0], times[: i + 1]])
            w = product_weights(nodes, t, a, b)
            acc = np.zeros_like(U[0])
            for k in range(i + 1):
                if k == i:
                    g = power[i]
                else:
                    sym = K.symbol(xi, t - times[k])
                    g = np.real(np.fft.ifftn(np.fft.fftn(power[k]) * sym))
                acc += w[k + 1] * g
                if k == 0:
                    acc += w[0] * g
            lhs = c_star * acc
            rhs = 0.5 * t ** (-(j - n) / d) * U[i]
            r, loc = _worst(lhs / rhs)
            if r > worst[0]:
                worst = (r, i, loc)
        out.append(HypothesisCheck("duhamel", worst[0], worst[1], worst[2], j))
    return out


def build_supersolution(kind, phi, majorant, constants, params, spec, disc):
    """Evaluate the kind-specific envelope on the mesh and measure its hypotheses.

    Parameters
    ----------
    kind : {"A", "B", "C", "D"}
    phi : Field
    majorant : MajorantKernel
    constants : MajorantConstants
        Supplies ``c_*``.
    params : dict
        ``eps`` (default ``1e-8``) fixes ``L``; ``q`` for kind ``C``;
        ``beta`` and ``M`` (or an ``orlicz`` :class:`OrliczSpec`) for kind
        ``D``; optional ``T`` (defaults to the mesh end), ``nphi`` (a field
        holding ``|∇^n φ|``) and ``check_nodes`` (count of mesh nodes used for
        the Duhamel check, default 48).
    spec : StructureSpec
    disc : Discretization

    Returns
    -------
    Supersolution
        Hypothesis ratios are reported, never raised: ``floor`` measures
        ``ε / inf t^{-(j-n)/d} U``, ``half`` measures
        ``c_* S_K(t)|∇^nφ| / (U/2)`` and ``duhamel`` the nonlinear bound.
    """
    if kind not in KINDS:
        raise ValidationError(f"supersolution kind must be one of {KINDS}")
    if not disc.matches(phi):
        raise ValidationError("initial data does not live on the discretization grid")
    d = float(majorant.order)
    N = phi.dim
    n, m = spec.n, spec.m
    T = float(params.get("T", disc.T))
    eps = float(params.get("eps", 1e-8))
    if not eps > 0:
        raise ValidationError("eps must be positive")
    q = params.get("q")
    orlicz = params.get("orlicz")
    if kind == "C":
        if q is None or not 1 < float(q) < float(spec.p_abs):
            raise ValidationError(f"kind C needs 1 < q < |p| = {float(spec.p_abs)}")
        q = float(q)
    if kind == "D":
        if orlicz is None:
            if "beta" not in params:
                raise ValidationError("kind D needs beta (and optionally M)")
            beta = float(params["beta"])
            M = float(params.get("M", OrliczSpec.minimal_M(beta, float(spec.p_abs))))
            orlicz = OrliczSpec(beta=beta, M=M, A=float(spec.A), p_bracket_0=float(spec.p_bracket(0)),
                                d=d, p_abs=float(spec.p_abs), dim=N)
        orlicz.validate()
    c_star = float(constants.c_star)
    times = disc.times
    data = _data_derivative(phi, n, params.get("nphi"))
    L = _floor_L(kind, eps, c_star, T, d, N, n, m)
    U = _envelope(kind, majorant, data, phi, times, c_star, L, T, q, orlicz, d)
    if not np.all(U > 0):
        raise ValidationError("supersolution is not positive on the grid; raise eps")

    report = {}
    floor = np.array([[eps / np.min(times[i] ** (-(j - n) / d) * U[i]) for j in range(n, m + 1)]
                      for i in range(len(times))])
    r, (i, jj) = _worst(floor)
    report["floor"] = HypothesisCheck("floor", r, int(i), (), n + int(jj))
    half = np.stack([c_star * _smooth(majorant, data, phi, t) / (0.5 * U[i]) for i, t in enumerate(times)])
    r, loc = _worst(half)
    report["half"] = HypothesisCheck("half", r, int(loc[0]), tuple(int(v) for v in loc[1:]))
    nodes = _check_nodes(len(times), int(params.get("check_nodes", 48)))
    for check in _duhamel_check(majorant, U, times, phi, spec, c_star, d, nodes):
        report[f"duhamel_j{check.j}"] = check

    consts = {"c_star": c_star, "c_tilde_star": float(constants.c_tilde_star), "C_star": float(constants.C_star),
              "L": float(L), "eps": eps, "T": T,
              "truncation_mass": float(truncation_mass(majorant, phi.box_halfwidth, times[-1]))}
    if q is not None:
        consts["q"] = q
    if orlicz is not None:
        consts["beta"] = float(orlicz.beta)
        consts["M"] = float(orlicz.M)
    return Supersolution(kind=kind, times=times.copy(), U=U, box_halfwidth=phi.box_halfwidth, dim=N,
                         reference_order=n, constants=consts, hypothesis_report=report)


@dataclass
class BoundCheck:
    """Result of :func:`check_apriori_bound`."""

    flags: np.ndarray
    worst_margin: float
    worst_location: tuple

    @property
    def all_true(self):
        return bool(np.all(self.flags))


def check_apriori_bound(run, U, n=None):
    """Check ``|∇^j u_k| ≤ t^{-(j-n)/d} U`` for every iterate, node and ``j ∈ {n..m}``.

    Uses the stored iterate history when the run kept one, otherwise the
    margins recorded against ``U`` during the run.
    """
    n = run.reference_order if n is None else int(n)
    if U.U.shape[0] != len(run.times) or not np.allclose(U.times, run.times, rtol=1e-12, atol=0):
        raise ValidationError("supersolution and run use different time meshes")
    if U.U.shape[1:] != run.states[0].shape[1:]:
        raise ValidationError("supersolution and run use different grids")
    d = run.order
    if run.history is not None:
        margins = np.empty((len(run.history), len(run.times), run.m - n + 1))
        for k, states in enumerate(run.history):
            for i, t in enumerate(run.times):
                for c, j in enumerate(range(n, run.m + 1)):
                    bound = t ** (-(j - n) / d) * U.U[i]
                    margins[k, i, c] = np.max(tensor_norm(states[j][i], run.dim, j) / bound)
    elif run.margins is not None and run.supersolution is U and n == run.reference_order:
        margins = run.margins
    else:
        raise ValidationError("run kept no iterate history for this envelope; monitor U in picard_solve "
                              "or pass keep_history=True")
    idx = np.unravel_index(int(np.argmax(margins)), margins.shape)
    flags = np.all(margins <= 1.0, axis=(0, 2))
    return BoundCheck(flags=flags, worst_margin=float(margins[idx]),
                      worst_location=(int(idx[0]), int(idx[1]), n + int(idx[2])))
