"""Picard iteration for the Duhamel integral equation on a periodic box.

Each iterate is stored in Fourier space at every time node.  The Duhamel
term is advanced mode by mode with an exponential integrator that is exact
for data piecewise linear in time, so the propagator factor
``e^{-(t-s)|ξ|^d}`` and its derivative multipliers ``(iξ)^α`` are applied
without any time-singular quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import ValidationError
from ..spectral import derivative_multiplier, derivative_tensor, tensor_norm, wavenumber_norm
from ..structure import StructureSpec, evaluate_nonlinearity, flux_components

GUARD_FACTOR = 1e6
STATUSES = ("converged", "diverged", "max-iterations")


def truncate_nonlinearity(F, eps):
    """Clamp of ``F(|t|, z)`` to ``[-1/ε, 1/ε]``.

    ``F`` is a :class:`~majorant_pde.structure.StructureSpec` or a callable
    ``F(t, state)``.  The result is a callable ``F_ε(t, state, dim=1)``.
    """
    if not eps > 0:
        raise ValidationError("truncation level eps must be positive")
    bound = 1.0 / eps

    def clamped(t, state, dim=1):
        if isinstance(F, StructureSpec):
            value = evaluate_nonlinearity(F, abs(t), state, dim)
        else:
            value = F(abs(t), state)
        return np.clip(value, -bound, bound)

    return clamped


def _phi1(z):
    """``(1 - e^{-z}) / z``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.expm1(-z) / z
    return np.where(z < 1e-8, 1.0 - 0.5 * z, out)


def _psi(z):
    """``∫_0^1 v e^{-z v} dv``, by series for small ``z``."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = (_phi1(z) - np.exp(-z)) / z
    series = 0.5 - z / 3 + z ** 2 / 8 - z ** 3 / 30 + z ** 4 / 144
    return np.where(z < 1e-3, series, out)


class _Integrator:
    """Exponential-integrator coefficients of every mesh step."""

    def __init__(self, lam, times):
        self.times = times
        steps = np.diff(np.concatenate([[0.0], times]))
        self.decay = []
        self.left = []
        self.right = []
        for i, dt in enumerate(steps):
            z = lam * dt
            p1 = _phi1(z)
            if i == 0:
                # constant data on [0, t_1]
                self.decay.append(None)
                self.left.append(None)
                self.right.append(dt * p1)
            else:
                ps = _psi(z)
                self.decay.append(np.exp(-z))
                self.left.append(dt * ps)
                self.right.append(dt * (p1 - ps))

    def duhamel(self, g_hat):
        """``I(t_i) = ∫_0^{t_i} e^{-λ(t_i - s)} g(s) ds`` for ``g`` given at the nodes."""
        out = np.empty_like(g_hat)
        out[0] = self.right[0] * g_hat[0]
        for i in range(1, len(self.times)):
            out[i] = self.decay[i] * out[i - 1] + self.left[i] * g_hat[i - 1] + self.right[i] * g_hat[i]
        return out


@dataclass
class PicardRun:
    """Outcome of :func:`picard_solve`.

    Attributes
    ----------
    times : ndarray
        Time nodes ``t_1 < ... < t_M = T``.
    states : list of ndarray
        ``states[j][i]`` is ``∇^j u(t_i)`` of the last accepted iterate.
    sup_history : ndarray
        ``(iterations + 1, M, m + 1)`` sup-norms of ``|∇^j u_k(t_i)|``.
    residuals : list of ndarray
        Per completed iteration, the weighted sup of ``∇^j(u_k - u_{k-1})``
        for every ``j`` (weight ``t^{(j-n)_+/d}``).
    residual_norms, ratios : list of float
        Combined residual per iteration and the ratios ``L_k / L_{k-1}``.
    margins : ndarray or None
        ``(iterations + 1, M, m - n + 1)`` worst values of
        ``|∇^j u_k| t^{(j-n)/d} / U`` against the monitored supersolution.
    """

    times: np.ndarray
    order: float
    dim: int
    box_halfwidth: float
    n_grid: int
    reference_order: int
    m: int
    status: str
    iterations: int
    tol: float
    states: list
    sup_history: np.ndarray
    residuals: list
    residual_norms: list
    ratios: list
    iterate_norms: list
    eps_inv: float
    guard_cap: float
    offending_node: int | None = None
    margins: np.ndarray | None = None
    supersolution: object = dc_field(default=None, repr=False)
    history: list | None = dc_field(default=None, repr=False)
    decay_fit: object = None

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def final_sups(self):
        """``(M, m + 1)`` sup-norms of the last accepted iterate."""
        return self.sup_history[-1]

    @property
    def final_sup(self):
        return float(np.max(self.final_sups[:, 0]))

    @property
    def bound_flags(self):
        """Per time node: did every iterate obey the monitored bound?"""
        if self.margins is None:
            return None
        return np.all(self.margins <= 1.0, axis=(0, 2))

    def solution(self, j=0):
        return self.states[j]

    def nodes(self):
        h = 2.0 * self.box_halfwidth / self.n_grid
        return -self.box_halfwidth + h * np.arange(self.n_grid)


def _weights(times, j, n, d):
    return times ** (max(j - n, 0) / d)


def _check_compatible(kernel, spec, phi, T, disc):
    d = float(kernel.order)
    if not d > spec.ell + spec.m:
        raise ValidationError(f"kernel order d={d} must exceed ℓ+m={spec.ell + spec.m}")
    if kernel.dim != phi.dim:
        raise ValidationError("kernel and data dimensions differ")
    if not disc.matches(phi):
        raise ValidationError("initial data does not live on the discretization grid")
    if abs(disc.T - float(T)) > 1e-12 * max(1.0, float(T)):
        raise ValidationError(f"horizon T={T} differs from the mesh end {disc.T}")
    if spec.family == "custom" and spec.func is None and spec.flux is None:
        raise ValidationError("custom structure needs a nonlinearity")
    return d


def picard_solve(kernel, spec, phi, T, disc, max_iter=200, tol=1e-10, eps=None, supersolution=None,
                 keep_history=False, min_iter=4):
    """Successive approximation ``u_{k+1} = S(t)φ + Σ a_α ∫ ∂^α S(t-s) F_ε(u_k(s)) ds``.

    Parameters
    ----------
    kernel : Profile or KernelSpec
        Linear propagator; only its order ``d`` and dimension are used since
        ``S(t)`` acts spectrally with symbol ``e^{-t|ξ|^d}``.
    spec : StructureSpec
    phi : Field
        Initial data on the grid of ``disc``.
    T : float
        Horizon; must equal the last mesh node.
    disc : Discretization
    max_iter, tol : int, float
        Iteration budget and relative sup-norm tolerance.
    eps : float, optional
        Clamp level of ``F_ε``; defaults to ``disc.eps`` and then to the
        guard-tied value (see Notes).
    supersolution : Supersolution, optional
        Envelope against which ``|∇^j u_k| ≤ t^{-(j-n)/d} U`` is monitored.
    keep_history : bool
        Keep the state of every iterate (memory heavy).
    min_iter : int
        Iterations required before convergence may be declared, unless the
        residual vanishes exactly.

    Notes
    -----
    The divergence guard fires when a weighted sup-norm exceeds
    ``10^6 × scale`` (``scale`` the largest weighted sup of ``u_0``, or 1 for
    zero data) or becomes non-finite.  Without an explicit ``ε`` the clamp is
    placed at ``1/ε = 10^3 max(W, W^{|p|}) max t^A`` where ``W`` is the
    supersolution maximum when one is monitored and the guard cap otherwise,
    so the clamp is inactive wherever the envelope or the guard holds.
    """
    d = _check_compatible(kernel, spec, phi, T, disc)
    if max_iter < 1 or not tol > 0:
        raise ValidationError("need max_iter >= 1 and tol > 0")
    dim = phi.dim
    n_ref, m = spec.n, spec.m
    times = disc.times
    M = times.size
    A = float(spec.A)
    disc.calibrate([((spec.ell + j) / d, A) for j in range(m + 1)], nodes=[0, M // 2, M - 1])
    if supersolution is not None:
        supersolution.check_mesh(times, phi)

    lam = wavenumber_norm(phi) ** d
    integ = _Integrator(lam, times)
    multipliers = {alpha: float(c) * derivative_multiplier(phi, alpha) for alpha, c in spec.a.items()}
    phi_hat = np.fft.fftn(phi.values)
    u0_hat = np.exp(-lam[None] * times.reshape((M,) + (1,) * dim)) * phi_hat[None]
    js = list(range(m + 1))
    weights = np.stack([_weights(times, j, n_ref, d) for j in js], axis=1)

    def states_of(u_hat):
        return [np.stack([derivative_tensor(phi, u_hat[i], j) for i in range(M)]) for j in js]

    def sups_of(states):
        return np.stack([np.array([np.max(tensor_norm(states[j][i], dim, j)) if np.all(np.isfinite(states[j][i]))
                                   else np.inf for i in range(M)]) for j in js], axis=1)

    states = states_of(u0_hat)
    sups0 = sups_of(states)
    scale = float(np.max(sups0 * weights))
    if not np.isfinite(scale):
        raise ValidationError("initial data produce non-finite linear iterates")
    scale = scale if scale > 0 else 1.0
    cap = GUARD_FACTOR * scale

    p_abs = float(spec.p_abs)
    tA = float(np.max(times ** A))
    if eps is None:
        eps = disc.eps
    if eps is not None:
        eps_inv = 1.0 / float(eps)
    else:
        W = supersolution.state_bound(spec, d) if supersolution is not None else cap
        eps_inv = 1e3 * max(W, W ** p_abs) * tA

    def forcing(states):
        g_hat = np.zeros((M,) + (phi.n,) * dim, dtype=complex)
        for i in range(M):
            st = [states[j][i] for j in js]
            flux = flux_components(spec, times[i], st, dim)
            for alpha, mult in multipliers.items():
                f = np.clip(np.asarray(flux[alpha], dtype=float), -eps_inv, eps_inv)
                g_hat[i] += mult * np.fft.fftn(np.broadcast_to(f, (phi.n,) * dim))
        return g_hat

    def margins_of(states):
        if supersolution is None:
            return None
        out = np.empty((M, m - n_ref + 1))
        for i in range(M):
            U = supersolution.U[i]
            for k, j in enumerate(range(n_ref, m + 1)):
                bound = times[i] ** (-(j - n_ref) / d) * U
                out[i, k] = np.max(tensor_norm(states[j][i], dim, j) / bound)
        return out

    sup_hist = [sups0]
    margin_hist = [margins_of(states)] if supersolution is not None else None
    history = [states] if keep_history else None
    residuals, res_norms, ratios, norms = [], [], [], []
    status, offending = "max-iterations", None
    u_hat = u0_hat
    iterations = 0

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, max_iter + 1):
            new_hat = u0_hat + integ.duhamel(forcing(states))
            new_states = states_of(new_hat)
            new_sups = sups_of(new_states)
            weighted = new_sups * weights
            bad = ~np.isfinite(weighted) | (weighted > cap)
            if np.any(bad):
                status = "diverged"
                offending = int(np.argmax(np.any(bad, axis=1)))
                iterations = k
                break
            res = np.array([max(float(np.max(tensor_norm(new_states[j][i] - states[j][i], dim, j))) * weights[i, j]
                                for i in range(M)) for j in js])
            res_total = float(np.max(res))
            norm_total = float(np.max(weighted))
            if res_norms and res_norms[-1] > 0:
                ratios.append(res_total / res_norms[-1])
            residuals.append(res)
            res_norms.append(res_total)
            norms.append(norm_total)
            states, u_hat = new_states, new_hat
            sup_hist.append(new_sups)
            if margin_hist is not None:
                margin_hist.append(margins_of(states))
            if history is not None:
                history.append(states)
            iterations = k
            small = res_total <= tol * norm_total
            if res_total == 0.0 or (small and k >= min_iter and ratios and ratios[-1] < 1.0):
                status = "converged"
                break

    return PicardRun(times=times, order=d, dim=dim, box_halfwidth=phi.box_halfwidth, n_grid=phi.n,
                     reference_order=n_ref, m=m, status=status, iterations=iterations, tol=float(tol),
                     states=states, sup_history=np.stack(sup_hist), residuals=residuals,
                     residual_norms=res_norms, ratios=ratios, iterate_norms=norms, eps_inv=float(eps_inv),
                     guard_cap=cap, offending_node=offending,
                     margins=None if margin_hist is None else np.stack(margin_hist),
                     supersolution=supersolution, history=history)
