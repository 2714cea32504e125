"""Majorant kernel ``K_θ(x, t) = P_θ(x, t^{θ/d})`` and sampled certification of its constants.

``K_θ`` dominates ``|∇^j G_d|`` up to ``t^{-j/d}`` (constants ``c_j``) and is
closed under time-split convolution up to a constant ``C_*``.  Both
constants are certified on finite sample sets.  For the composition an
independent oracle is available: by the semigroup law of ``P_θ``

    ∫ K(x - y, t - s) K(y, s) dy = P_θ(x, (t - s)^{θ/d} + s^{θ/d}),

so the ratio is ``P_θ(x, κ t^{θ/d}) / P_θ(x, t^{θ/d})`` with ``κ ∈ [1, 2]``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import CertificationError, QuadratureError, TruncationWarning, ValidationError
from .kernels import Profile, eval_kernel, tail_growth
from .spaces import Field, uloc_ball_average_sup
from .spectral import derivative_multiplier, tensor_indices, alpha_of, wavenumber_norm


def default_theta(order, decay_exponent):
    """``θ = min{d, L, 1}``: the Poisson kernel whenever admissible."""
    return min(float(order), float(decay_exponent), 1.0)


@dataclass(frozen=True, eq=False)
class MajorantKernel:
    """Evaluator of ``K_θ`` built on a fractional profile of order ``θ``."""

    base: Profile
    order: float
    decay_exponent: float | None = None

    @property
    def theta(self):
        return self.base.order

    @property
    def dim(self):
        return self.base.dim

    def base_time(self, t):
        return np.asarray(t, dtype=float) ** (self.theta / self.order)

    def __call__(self, x, t, j=0):
        """``∇^j_x K_θ(x, t)`` (signed for ``N = 1``, norm for ``N = 2``)."""
        return eval_kernel(self.base, j, x, self.base_time(t))

    def radial(self, r, t):
        """``K_θ`` as a function of ``|x| = r``."""
        tau = self.base_time(t)
        return tau ** (-self.dim / self.theta) * self.base.radial(np.asarray(r) * tau ** (-1.0 / self.theta))

    def symbol(self, xi_norm, t):
        return np.exp(-self.base_time(t) * np.asarray(xi_norm) ** self.theta)

    def scale(self, t):
        """Spatial scale ``t^{1/d}`` of ``K_θ(·, t)``."""
        return float(t) ** (1.0 / self.order)


def make_majorant(base_profile, order, decay_exponent=None):
    """Build ``K_θ`` from a profile of order ``θ`` for a kernel of order ``d``.

    Raises
    ------
    ValidationError
        If ``θ ∉ (0, 2]`` or ``θ > min{d, L}``.
    """
    theta = base_profile.order
    if not 0 < theta <= 2:
        raise ValidationError(f"majorant order θ={theta} must lie in (0, 2]")
    if theta > order:
        raise ValidationError(f"θ={theta} exceeds d={order}; need θ <= min{{d, L}}")
    if decay_exponent is not None and theta > decay_exponent:
        raise ValidationError(f"θ={theta} exceeds L={decay_exponent}; need θ <= min{{d, L}}")
    return MajorantKernel(base=base_profile, order=float(order), decay_exponent=decay_exponent)


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

@dataclass
class DominationCertificate:
    c: list
    argmax: list
    n_samples: int


@dataclass
class CompositionCertificate:
    C_star: float
    C_star_oracle: float
    oracle_gap: float
    argmax: tuple
    n_samples: int
    ratios: np.ndarray = dc_field(repr=False, default=None)
    oracle_ratios: np.ndarray = dc_field(repr=False, default=None)


@dataclass
class MajorantConstants:
    c: list
    C_star: float
    c_star: float
    c_tilde_star: float
    sample_report: dict = dc_field(default_factory=dict)

    @classmethod
    def assemble(cls, c, C_star, a_sum=1.0, sample_report=None):
        """``c_* = (1 + Σ|a_α|) max_j c_j`` and ``c̃_* = 2 c_* C_*``."""
        c = [float(v) for v in c]
        if not c or not all(math.isfinite(v) and v > 0 for v in c + [C_star]):
            raise CertificationError("majorant constants must be finite and positive")
        c_star = (1.0 + float(a_sum)) * max(c)
        return cls(c=c, C_star=float(C_star), c_star=c_star, c_tilde_star=2.0 * c_star * C_star,
                   sample_report=dict(sample_report or {}))

    def to_text(self):
        lines = [f"c_{j}: {v:.10g}" for j, v in enumerate(self.c)]
        lines += [f"C_star: {self.C_star:.10g}", f"c_star: {self.c_star:.10g}",
                  f"c_tilde_star: {self.c_tilde_star:.10g}"]
        lines += [f"{k}: {v}" for k, v in self.sample_report.items()]
        return "\n".join(lines)


def certify_domination(G, K, j_max, samples):
    """``c_j = max |∇^j G(x, t)| t^{j/d} / K_θ(x, t)`` over the samples.

    Raises
    ------
    CertificationError
        If the ratio is non-finite or keeps growing over the outermost scales
        (the usual symptom of ``θ > L``).
    """
    d = G.order
    x = samples.x[:, 0] if G.dim == 1 else samples.x
    t = samples.t
    z = (np.abs(x) if G.dim == 1 else np.linalg.norm(x, axis=-1)) * t ** (-1.0 / d)
    k = K(x, t)
    c, where = [], []
    for j in range(j_max + 1):
        ratio = np.abs(eval_kernel(G, j, x, t)) * t ** (j / d) / k
        if not np.all(np.isfinite(ratio)):
            raise CertificationError(f"non-finite domination ratio for j={j}")
        if tail_growth(z, ratio):
            raise CertificationError(
                f"domination ratio for j={j} grows at large |x|; θ={K.theta} may exceed L")
        i = int(np.argmax(ratio))
        c.append(float(ratio[i]))
        where.append((samples.x[i].tolist(), float(t[i]), float(z[i])))
    return DominationCertificate(c=c, argmax=where, n_samples=len(samples))


# -- composition quadrature --------------------------------------------------

_GL = leggauss(20)


def _gl_panels(edges):
    g, w = _GL
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes = (half[:, None] * g + 0.5 * (a + b)[:, None]).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def _graded_points(center, scale, reach):
    steps = scale * 2.0 ** np.arange(-6, int(math.ceil(math.log2(reach / scale))) + 1)
    return np.concatenate([[center], center + steps, center - steps])


def _convolve_1d(K, x, s, t, reach_factor=1e6):
    sa, sb = K.scale(s), K.scale(t - s)
    lo = min(sa, sb)
    reach = reach_factor * max(abs(x), sa, sb)
    pts = np.concatenate([_graded_points(0.0, lo, reach), _graded_points(x, lo, reach)])
    pts = np.unique(np.clip(pts, -reach, reach))
    y, w = _gl_panels(pts)
    return float(np.sum(w * K(x - y, t - s) * K(y, s)))


def _half_plane(Fr, Gr, X, scale, reach, n_phi=64):
    # ∫ over {|y| < |y - x|}, x = (X, 0), in polar coordinates about the origin
    g, w = leggauss(n_phi)
    total = 0.0
    for lo, hi in ((0.0, 0.5 * math.pi), (0.5 * math.pi, math.pi)):
        phis = 0.5 * (hi - lo) * g + 0.5 * (hi + lo)
        wphi = 0.5 * (hi - lo) * w
        for phi, wp in zip(phis, wphi):
            c = math.cos(phi)
            rmax = reach if c <= 0 else min(reach, X / (2.0 * c))
            pts = _graded_points(0.0, scale, rmax)
            pts = np.unique(np.clip(pts, 0.0, rmax))
            rho, wr = _gl_panels(pts)
            dist = np.sqrt(np.maximum(X * X + rho * rho - 2.0 * X * rho * c, 0.0))
            total += wp * np.sum(wr * rho * Fr(rho) * Gr(dist))
    return 2.0 * total


def _convolve_2d(K, x, s, t, reach_factor=1e4):
    X = float(np.linalg.norm(x))
    sa, sb = K.scale(s), K.scale(t - s)
    reach = reach_factor * max(X, sa, sb)
    Fa = lambda r: K.radial(r, s)
    Fb = lambda r: K.radial(r, t - s)
    if X == 0.0:
        pts = np.unique(np.clip(_graded_points(0.0, min(sa, sb), reach), 0.0, reach))
        rho, wr = _gl_panels(pts)
        return float(2.0 * math.pi * np.sum(wr * rho * Fa(rho) * Fb(rho)))
    return _half_plane(Fa, Fb, X, sa, reach) + _half_plane(Fb, Fa, X, sb, reach)


def composition_oracle(K, x, s, t):
    """``P_θ(x, (t-s)^{θ/d} + s^{θ/d}) / K_θ(x, t)`` from the semigroup of ``P_θ``."""
    e = K.theta / K.order
    tau = (t - s) ** e + s ** e
    num = eval_kernel(K.base, 0, x, tau)
    return num / K(x, t)


def certify_composition(K, samples, oracle_tol=1e-6):
    """``C_* = max [∫ K(x-y, t-s) K(y, s) dy] / K(x, t)`` over the samples.

    The convolution is computed by graded Gauss-Legendre quadrature and
    compared against :func:`composition_oracle`.

    Raises
    ------
    QuadratureError
        If quadrature and oracle disagree by more than ``oracle_tol`` (relative).
    """
    if samples.s is None:
        raise ValidationError("composition samples need split times s")
    ratios = np.empty(len(samples))
    for i in range(len(samples)):
        xi, si, ti = samples.x[i], float(samples.s[i]), float(samples.t[i])
        if K.dim == 1:
            conv = _convolve_1d(K, float(xi[0]), si, ti)
            ref = float(K(float(xi[0]), ti))
        else:
            conv = _convolve_2d(K, xi, si, ti)
            ref = float(K(xi, ti))
        if not ref > 0:
            raise QuadratureError(f"K_θ underflows at sample {i} (|x|={np.linalg.norm(xi):.3g}, t={ti:.3g}); "
                                  f"narrow the sampled z range", estimates=(conv, ref))
        ratios[i] = conv / ref
    xo = samples.x[:, 0] if K.dim == 1 else samples.x
    oracle = composition_oracle(K, xo, samples.s, samples.t)
    gap = float(np.max(np.abs(ratios - oracle) / oracle))
    if gap > oracle_tol:
        raise QuadratureError(f"composition quadrature deviates from the semigroup oracle by {gap:.3e}",
                              estimates=(float(np.max(ratios)), float(np.max(oracle))))
    i = int(np.argmax(ratios))
    return CompositionCertificate(C_star=float(ratios[i]), C_star_oracle=float(np.max(oracle)),
                                  oracle_gap=gap,
                                  argmax=(samples.x[i].tolist(), float(samples.s[i]), float(samples.t[i])),
                                  n_samples=len(samples), ratios=ratios, oracle_ratios=oracle)


def sharp_composition_constant(theta, order):
    """``sup κ = 2^{1 - θ/d}`` bounds the large-|x| ratio ``κ`` for Poisson-type tails."""
    return 2.0 ** (1.0 - theta / order)


# ---------------------------------------------------------------------------
# Smoothing operators
# ---------------------------------------------------------------------------

def _kernel_order(kernel):
    return kernel.order


def _base_profile(kernel):
    return kernel.base if isinstance(kernel, MajorantKernel) else kernel


def truncation_mass(kernel, box_halfwidth, t):
    """Mass of ``|kernel(·, t)|`` outside the ball of radius ``X``."""
    return _base_profile(kernel).abs_mass_beyond(box_halfwidth * float(t) ** (-1.0 / _kernel_order(kernel)))


def _symbol(kernel, field, t):
    xi = wavenumber_norm(field)
    if isinstance(kernel, MajorantKernel):
        return kernel.symbol(xi, t)
    return np.exp(-float(t) * xi ** kernel.order)


def _sampled_kernel(kernel, field, t, j):
    off = field.offsets()
    if field.dim == 1:
        return kernel(off, t, j) if isinstance(kernel, MajorantKernel) else eval_kernel(kernel, j, off, t)
    if j:
        raise ValidationError("direct (sampled-kernel) smoothing supports j = 0 only in N = 2")
    pts = np.stack(np.meshgrid(off, off, indexing="ij"), axis=-1)
    return kernel(pts, t) if isinstance(kernel, MajorantKernel) else eval_kernel(kernel, 0, pts, t)


def _cell_weights(kernel, field, t, nodes=6):
    """Cell integrals of a positive kernel at the minimum-image offsets.

    Mass outside the box is spread uniformly (the far periodic images) and the
    origin cell receives the complement, so the weights are nonnegative and
    sum to one even when the kernel is narrower than one cell.
    """
    g, w = leggauss(nodes)
    h = field.spacing
    off = field.offsets()
    q = 0.5 * h * g
    wq = 0.5 * h * w

    def radial(r):
        if isinstance(kernel, MajorantKernel):
            return kernel.radial(r, t)
        d = kernel.order
        return t ** (-kernel.dim / d) * kernel.radial(r * t ** (-1.0 / d))

    if field.dim == 1:
        pts = off[:, None] + q[None, :]
        weights = radial(np.abs(pts)) @ wq
    else:
        px = off[:, None] + q[None, :]
        r = np.hypot(px[:, None, :, None], px[None, :, None, :])
        weights = np.einsum("ijab,a,b->ij", radial(r), wq, wq)
    weights = np.maximum(weights, 0.0)
    origin = (0,) * field.dim
    weights[origin] = 0.0
    outside = min(1.0, truncation_mass(kernel, field.box_halfwidth, t))
    weights += outside / weights.size
    weights[origin] += max(0.0, 1.0 - float(weights.sum()))
    return weights


def apply_smoothing(kernel, field, t, j=0, alpha=None, method="spectral", truncation_tol=1e-3):
    """Periodic-grid convolution of ``∂^α kernel(·, t)`` with ``field``.

    ``kernel`` is a :class:`~majorant_pde.kernels.Profile` (the linear
    propagator ``S(t)``) or a :class:`MajorantKernel` (``S_{K_θ}(t)``).
    ``method="spectral"`` multiplies by the exact Fourier symbol;
    ``method="direct"`` convolves with grid samples of the profile;
    ``method="cell"`` (positive kernels, ``j = 0``) convolves with cell
    integrals, giving a positive, mass-preserving discrete operator.  For
    ``N = 2`` and ``j > 0`` without ``alpha`` the pointwise Frobenius norm of
    the derivative tensor is returned.  The kernel mass outside the box is
    attached as ``truncation_error`` and warned about above ``truncation_tol``.
    """
    if not t > 0:
        raise ValidationError("smoothing time must be positive")
    trunc = truncation_mass(kernel, field.box_halfwidth, t)
    if trunc > truncation_tol:
        warnings.warn(f"kernel mass {trunc:.2e} lies outside the box at t={t:.3g}", TruncationWarning,
                      stacklevel=2)
    v_hat = np.fft.fftn(field.values)
    if method == "spectral":
        m = _symbol(kernel, field, t)
        if alpha is not None:
            out = np.real(np.fft.ifftn(v_hat * m * derivative_multiplier(field, tuple(alpha))))
        elif field.dim == 1:
            out = np.real(np.fft.ifftn(v_hat * m * derivative_multiplier(field, (j,))))
        elif j == 0:
            out = np.real(np.fft.ifftn(v_hat * m))
        else:
            comps = [np.real(np.fft.ifftn(v_hat * m * derivative_multiplier(field, alpha_of(ix, 2))))
                     for ix in tensor_indices(2, j)]
            out = np.sqrt(np.sum(np.square(comps), axis=0))
    elif method == "direct":
        if alpha is not None:
            raise ValidationError("direct smoothing takes j, not a multi-index")
        ker = _sampled_kernel(kernel, field, t, j)
        out = np.real(np.fft.ifftn(v_hat * np.fft.fftn(ker))) * field.cell_volume
    elif method == "cell":
        if j or alpha is not None:
            raise ValidationError("cell smoothing supports j = 0 only")
        if isinstance(kernel, Profile) and kernel.sign_changing:
            raise ValidationError("cell smoothing needs a positive kernel")
        ker = _cell_weights(kernel, field, t)
        out = np.real(np.fft.ifftn(v_hat * np.fft.fftn(ker)))
    else:
        raise ValidationError(f"unknown smoothing method {method!r}")
    return field.with_values(out, truncation_error=max(field.truncation_error, trunc))


def smoothing_sup_estimate(kernel, field, t):
    """``(sup S_K(t)|φ|, sup_x ⨍_{B(x, t^{1/d})} |φ|)``."""
    smoothed = apply_smoothing(kernel, field.abs(), t)
    rhs = uloc_ball_average_sup(field, kernel.scale(t) if isinstance(kernel, MajorantKernel)
                                else float(t) ** (1.0 / kernel.order))
    return float(np.max(smoothed.values)), float(rhs)
