"""Grid fields and the ball-average functionals used by the smallness conditions.

All quantities are suprema over ball averages ``⨍_{B(x,σ)}``.  Balls are
discrete: a cell contributes with the fraction of its volume inside the
ball (exact in one dimension, sub-sampled in two), so constants are
reproduced exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import ValidationError


# ---------------------------------------------------------------------------
# Field
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Field:
    """Values on the periodic grid ``{-X + i h}`` of ``[-X, X)^N``, ``h = 2X/n``.

    ``truncation_error`` carries the kernel mass that fell outside the box
    when the field was produced by a smoothing operator.
    """

    values: np.ndarray
    box_halfwidth: float
    dim: int = 1
    truncation_error: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if self.dim not in (1, 2):
            raise ValidationError(f"unsupported dimension N={self.dim}")
        if v.ndim != self.dim or len(set(v.shape)) != 1:
            raise ValidationError(f"field values must be a square array of rank {self.dim}, got {v.shape}")
        if not self.box_halfwidth > 0:
            raise ValidationError("box half-width must be positive")
        if not np.all(np.isfinite(v)):
            raise ValidationError("field values must be finite")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def spacing(self):
        return 2.0 * self.box_halfwidth / self.n

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    def nodes(self):
        return -self.box_halfwidth + self.spacing * np.arange(self.n)

    def coords(self):
        x = self.nodes()
        if self.dim == 1:
            return x
        return np.meshgrid(x, x, indexing="ij")

    def radius(self):
        if self.dim == 1:
            return np.abs(self.nodes())
        x, y = self.coords()
        return np.hypot(x, y)

    def offsets(self):
        """Minimum-image displacement of each node from the first node."""
        return np.fft.fftfreq(self.n) * self.n * self.spacing

    def wavenumbers(self):
        """Angular wavenumbers per axis, shaped for broadcasting."""
        k = 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.spacing)
        if self.dim == 1:
            return (k,)
        return (k[:, None], k[None, :])

    def abs(self):
        return self.with_values(np.abs(self.values))

    def with_values(self, values, truncation_error=None):
        te = self.truncation_error if truncation_error is None else truncation_error
        return Field(values, self.box_halfwidth, self.dim, te)

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def integral(self):
        return float(np.sum(self.values) * self.cell_volume)

    @classmethod
    def constant(cls, c, box_halfwidth, n, dim=1):
        return cls(np.full((n,) * dim, float(c)), box_halfwidth, dim)

    @classmethod
    def from_function(cls, f, box_halfwidth, n, dim=1, average=False, singular_origin=False):
        """Sample ``f`` on the grid.

        ``f`` takes ``x`` (``N=1``) or ``(x, y)`` (``N=2``) arrays.  With
        ``average=True`` each cell holds the Gauss-Legendre cell average; with
        ``singular_origin=True`` the cell containing the origin holds an
        adaptive-quadrature average, which keeps integrable singularities finite.
        """
        if n % 2:
            raise ValidationError("use an even number of grid points so the origin is a node")
        h = 2.0 * box_halfwidth / n
        x = -box_halfwidth + h * np.arange(n)
        if average:
            g, w = leggauss(8)
            off = 0.5 * h * g
            w = 0.5 * w
            if dim == 1:
                pts = x[:, None] + off[None, :]
                with np.errstate(divide="ignore", invalid="ignore"):
                    vals = (f(pts) * w).sum(axis=1)
            else:
                px = x[:, None] + off[None, :]
                vals = np.zeros((n, n))
                with np.errstate(divide="ignore", invalid="ignore"):
                    for a in range(8):
                        for b in range(8):
                            vals += w[a] * w[b] * f(px[:, a][:, None], px[:, b][None, :])
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = f(x) if dim == 1 else f(*np.meshgrid(x, x, indexing="ij"))
            vals = np.array(np.broadcast_to(vals, (n,) * dim), dtype=float)
        if singular_origin:
            c = n // 2
            if dim == 1:
                vals[c] = _singular_cell_average_1d(f, h)
            else:
                vals[c, c] = _singular_cell_average_2d(f, h)
        return cls(vals, box_halfwidth, dim)


def _scalar(f, *args):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = float(np.asarray(f(*(np.asarray(a, dtype=float) for a in args))))
    return v if math.isfinite(v) else 0.0


def _singular_cell_average_1d(f, h):
    # s = a e^{-w} turns |s|^{-1} log-type singularities into slowly decaying tails
    a = 0.5 * h
    total = 0.0
    for sign in (-1.0, 1.0):
        total += integrate.quad(lambda w: _scalar(f, sign * a * math.exp(-w)) * a * math.exp(-w),
                                0.0, 700.0, limit=400)[0]
    return total / h


def _singular_cell_average_2d(f, h):
    # split the cell into 8 triangles with a vertex at the origin; the Duffy
    # map (u, v) -> (u, u v) with u = a e^{-w} removes the point singularity
    a = 0.5 * h
    total = 0.0
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for swap in (False, True):
                def g(v, w, sx=sx, sy=sy, swap=swap):
                    u = a * math.exp(-w)
                    x, y = (u * v, u) if swap else (u, u * v)
                    return _scalar(f, sx * x, sy * y) * u * u
                total += integrate.dblquad(g, 0.0, 60.0, 0.0, 1.0)[0]
    return total / h ** 2


# ---------------------------------------------------------------------------
# Ball averages
# ---------------------------------------------------------------------------

def ball_weights(field, sigma):
    """Fraction of each cell (at minimum-image offsets) inside ``B(0, σ)``."""
    h = field.spacing
    off = field.offsets()
    if field.dim == 1:
        lo = np.maximum(off - 0.5 * h, -sigma)
        hi = np.minimum(off + 0.5 * h, sigma)
        return np.clip((hi - lo) / h, 0.0, 1.0)
    sub = (np.arange(8) + 0.5) / 8 - 0.5
    ox = off[:, None, None, None] + h * sub[None, None, :, None]
    oy = off[None, :, None, None] + h * sub[None, None, None, :]
    # only cells near the circle need sub-sampling
    w = np.zeros((field.n, field.n))
    rr = np.hypot(off[:, None], off[None, :])
    inner = rr + 0.75 * h <= sigma
    w[inner] = 1.0
    edge = np.abs(rr - sigma) < 0.75 * h
    if np.any(edge):
        i, j = np.nonzero(edge)
        inside = (ox[i, 0] ** 2 + oy[0, j] ** 2) <= sigma ** 2
        w[i, j] = inside.reshape(i.size, -1).mean(axis=1)
    return w


def ball_averages(field, sigma, values=None):
    """Average of ``values`` (default ``|field|``) over ``B(x, σ)`` for every node ``x``."""
    if not sigma > 0:
        raise ValidationError("ball radius must be positive")
    if sigma > field.box_halfwidth:
        raise ValidationError(f"ball radius {sigma} exceeds the box half-width {field.box_halfwidth}")
    v = np.abs(field.values) if values is None else np.asarray(values, dtype=float)
    w = ball_weights(field, sigma)
    conv = np.real(np.fft.ifftn(np.fft.fftn(v) * np.fft.fftn(w)))
    avg = conv / w.sum()
    if np.all(v >= 0):
        avg = np.maximum(avg, 0.0)
    return avg


def _sup_with_center(field, avg):
    k = np.unravel_index(int(np.argmax(avg)), avg.shape)
    x = field.nodes()
    center = float(x[k[0]]) if field.dim == 1 else (float(x[k[0]]), float(x[k[1]]))
    return float(avg[k]), center


def uloc_ball_average_sup(field, sigma):
    """``sup_x ⨍_{B(x,σ)} |φ|``; requires ``σ <= X/2``."""
    if sigma > 0.5 * field.box_halfwidth:
        raise ValidationError(f"radius σ={sigma} exceeds half the box half-width X/2={0.5 * field.box_halfwidth}")
    return _sup_with_center(field, ball_averages(field, sigma))[0]


def default_radii(field, cap=None, count=32):
    cap = 0.5 * field.box_halfwidth if cap is None else float(cap)
    lo = 2.0 * field.spacing
    if cap < lo:
        raise ValidationError(f"radius cap {cap:.3g} is below two grid cells ({lo:.3g}); refine the grid")
    return np.geomspace(lo, cap, count)


def morrey_sup(field, r, q=1.0, radii=None, radius_cap=None):
    """``sup_{x, σ} σ^{N/r} (⨍_{B(x,σ)} |φ|^q)^{1/q}`` with the worst ``(x, σ)``."""
    if not r >= 1:
        raise ValidationError("Morrey exponent r must be >= 1")
    if not 1 <= q <= r:
        raise ValidationError(f"need 1 <= q <= r, got q={q}, r={r}")
    if radii is None:
        radii = default_radii(field, radius_cap)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if radii.size == 0:
        raise ValidationError("empty radius set")
    if radius_cap is not None and np.any(radii > radius_cap * (1 + 1e-12)):
        raise ValidationError("radii must not exceed the cap")
    power = np.abs(field.values) ** q
    best = (-1.0, None, None)
    expo = 0.0 if math.isinf(r) else field.dim / r
    for sigma in radii:
        val, center = _sup_with_center(field, ball_averages(field, sigma, power))
        val = sigma ** expo * val ** (1.0 / q)
        if val > best[0]:
            best = (val, center, float(sigma))
    return best


def morrey_norm(field, r, q=1.0, radii=None, radius_cap=None):
    """Capped Morrey quantity over a finite radius set (see :func:`morrey_sup`)."""
    return morrey_sup(field, r, q, radii, radius_cap)[0]


# ---------------------------------------------------------------------------
# Orlicz-type functions
# ---------------------------------------------------------------------------

def orlicz_phi(s, beta, M=math.e):
    """``Φ_M(s) = s log(M + s)^β`` (``M = e`` gives ``Φ``)."""
    s = np.asarray(s, dtype=float)
    return s * np.log(M + s) ** beta


def orlicz_phi_inverse(y, beta, M=math.e, rtol=1e-10):
    """Inverse of :func:`orlicz_phi` by bracketed bisection."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValidationError("Φ^{-1} is defined on [0, ∞)")
    # Φ_M(s) >= s log(M)^β and Φ_M(s) <= s log(M + y)^β on s <= y
    hi = y / math.log(M) ** beta
    lo = y / np.log(M + y) ** beta
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = orlicz_phi(mid, beta, M) > y
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= rtol * hi):
            break
    return 0.5 * (lo + hi)


def rho_weight(s, dim, exponent):
    """``ρ(s) = s^{-N} log(e + 1/s)^{-exponent}``."""
    s = np.asarray(s, dtype=float)
    return s ** (-dim) * np.log(math.e + 1.0 / s) ** (-exponent)


@dataclass(frozen=True)
class OrliczSpec:
    """Parameters of ``Φ_M``; ``p_abs`` is ``|p|``."""

    beta: float
    M: float
    A: float
    p_bracket_0: float
    d: float
    p_abs: float = 2.0
    dim: int = 1

    @staticmethod
    def minimal_M(beta, p_abs):
        """A shift for which both window properties hold (sufficient, not sharp)."""
        return max(math.e, math.exp(2.0 * beta * p_abs / (p_abs - 1.0)))

    def validate(self, samples=None):
        if not self.beta > 0:
            raise ValidationError("β must be positive")
        if not self.M >= math.e:
            raise ValidationError(f"M must be >= e, got {self.M}")
        if not self.p_abs > 1:
            raise ValidationError("|p| must exceed 1")
        s = np.logspace(-12, 12, 2001) if samples is None else np.asarray(samples, dtype=float)
        log_m = np.log(self.M + s)
        curvature = log_m * (2 * self.M + s) + (self.beta - 1) * s
        if np.any(curvature < 0):
            raise ValidationError("Φ_M is not convex on the sampled range; increase M")
        a = 0.5 * (self.p_abs - 1)
        slope = a * (self.M + s) * log_m - self.beta * self.p_abs * s
        if np.any(slope < 0):
            bad = float(s[np.argmin(slope)])
            raise ValidationError(
                f"s^((|p|-1)/2) log(M+s)^(-β|p|) decreases near s={bad:.3g}; increase M "
                f"(M >= {self.minimal_M(self.beta, self.p_abs):.4g} suffices)")
        return self

    def sandwich_constant(self, samples=None):
        """Smallest ``C`` with ``C^{-1}Φ_M <= Φ <= CΦ_M`` on the samples."""
        s = np.logspace(-12, 12, 2001) if samples is None else np.asarray(samples, dtype=float)
        ratio = orlicz_phi(s, self.beta) / orlicz_phi(s, self.beta, self.M)
        return float(max(ratio.max(), (1.0 / ratio).max()))


# ---------------------------------------------------------------------------
# Initial-data conditions
# ---------------------------------------------------------------------------

@dataclass
class ConditionReport:
    case: str
    lhs: float
    rhs: float
    gamma: float
    passed: bool
    worst_center: object = None
    worst_radius: float | None = None
    T: float | None = None
    extra: dict = dc_field(default_factory=dict)

    @property
    def ratio(self):
        return self.lhs / self.rhs if self.rhs > 0 else math.inf

    def to_text(self):
        lines = [f"case: {self.case}", f"lhs: {self.lhs:.10g}", f"rhs: {self.rhs:.10g}",
                 f"gamma: {self.gamma:.10g}", f"T: {self.T:.10g}",
                 f"worst_center: {self.worst_center}", f"worst_radius: {self.worst_radius}",
                 f"pass: {str(self.passed).lower()}"]
        lines += [f"{k}: {v}" for k, v in self.extra.items()]
        return "\n".join(lines)


def check_initial_condition(field, case, T, gamma, q=None, orlicz=None, radii=None):
    """Evaluate the smallness condition on ``φ`` that matches ``case.case``.

    For case A with ``n > 0`` pass ``|∇^n φ|`` as ``field``.  Case C needs
    ``q > 1`` and case D an :class:`OrliczSpec` (only ``β`` enters here).
    """
    kind = case.case
    if field.dim != case.dim:
        raise ValidationError(f"field dimension {field.dim} does not match N={case.dim}")
    if not T > 0 or not gamma > 0:
        raise ValidationError("T and γ must be positive")
    if q is not None and kind != "C":
        raise ValidationError(f"exponent q applies to case C only (case is {kind})")
    if orlicz is not None and kind != "D":
        raise ValidationError(f"an Orlicz spec applies to case D only (case is {kind})")
    N, d = case.dim, case.order
    scale = T ** (1.0 / d)
    if scale > 0.5 * field.box_halfwidth:
        raise ValidationError(f"T^(1/d)={scale:.4g} exceeds X/2; enlarge the box")
    if radii is None and kind != "B":
        radii = default_radii(field, scale)
    r_n = case.r_n

    if kind == "A":
        lhs, center, sigma = morrey_sup(field, float(r_n) if not math.isinf(r_n) else math.inf,
                                        1.0, radii, scale)
        rhs = gamma
    elif kind == "B":
        lhs, center = _sup_with_center(field, ball_averages(field, scale))
        sigma = scale
        rhs = gamma * T ** (-N / (d * float(r_n)))
    elif kind == "C":
        if q is None or not q > 1:
            raise ValidationError("case C requires an exponent q > 1")
        lhs, center, sigma = morrey_sup(field, float(r_n), min(q, float(r_n)), radii, scale)
        rhs = gamma
    elif kind == "D":
        if orlicz is None:
            raise ValidationError("case D requires an OrliczSpec")
        beta = orlicz.beta
        lifted = orlicz_phi(T ** (N / d) * np.abs(field.values), beta)
        lhs, center, sigma = -1.0, None, None
        for s in np.atleast_1d(radii):
            avg, c = _sup_with_center(field, ball_averages(field, s, lifted))
            val = float(orlicz_phi_inverse(avg, beta)) / float(rho_weight(s / scale, N, case.rho_exponent))
            if val > lhs:
                lhs, center, sigma = val, c, float(s)
        rhs = gamma
    else:
        raise ValidationError(f"unknown case {kind!r}")
    return ConditionReport(case=kind, lhs=float(lhs), rhs=float(rhs), gamma=float(gamma),
                           passed=bool(lhs <= rhs), worst_center=center, worst_radius=sigma, T=T)


# ---------------------------------------------------------------------------
# Critical initial profiles
# ---------------------------------------------------------------------------

def _radial_origin_average(profile, log_weight, h, dim):
    """Exact average over the origin cell of a radial profile.

    ``log_weight(u)`` must equal ``profile(e^{-u}) e^{-N u}``, evaluated
    without underflow, so that the mass of the inscribed ball is a
    quadrature in ``u = log(1/r)`` with an algebraic or exponential tail.
    """
    a = 0.5 * h
    u0 = math.log(1.0 / a)
    inner = integrate.quad(log_weight, u0, math.inf, limit=400)[0]
    if dim == 1:
        return 2.0 * inner / h
    inner *= 2.0 * math.pi
    # square minus inscribed disk, in polar coordinates over one eighth
    corner = integrate.dblquad(lambda r, phi: float(profile(r)) * r,
                               0.0, 0.25 * math.pi, lambda phi: a, lambda phi: a / math.cos(phi))[0]
    return (inner + 8.0 * corner) / h ** 2


def _radial_field(profile, log_weight, box_halfwidth, n, dim):
    def f(*xs):
        r = np.abs(xs[0]) if dim == 1 else np.hypot(*xs)
        return profile(r)
    fld = Field.from_function(f, box_halfwidth, n, dim, average=True)
    vals = fld.values.copy()
    c = (n // 2,) * dim
    vals[c] = _radial_origin_average(profile, log_weight, 2.0 * box_halfwidth / n, dim)
    return Field(vals, box_halfwidth, dim)


def power_law_field(amplitude, exponent, box_halfwidth, n, dim=1, offset=0.0):
    """``γ'|x|^{-a} + C`` with exact cell averages (``a < N``)."""
    if exponent >= dim:
        raise ValidationError(f"|x|^(-{exponent}) is not locally integrable in N={dim}")

    def profile(r):
        return amplitude * r ** (-exponent) + offset

    def log_weight(u):
        return amplitude * math.exp((exponent - dim) * u) + offset * math.exp(-dim * u)

    return _radial_field(profile, log_weight, box_halfwidth, n, dim)


def log_critical_field(amplitude, box_halfwidth, n, dim=1, log_exponent=1.5, offset=0.0):
    """``γ'|x|^{-N} log(e + 1/|x|)^{-b} + C``; ``b = N/d + 1`` is the critical choice."""
    if log_exponent <= 1:
        raise ValidationError("the log exponent must exceed 1 for local integrability")

    def profile(r):
        return amplitude * r ** (-dim) * np.log(math.e + 1.0 / r) ** (-log_exponent) + offset

    def log_weight(u):
        # log(e + e^u) = u + log(1 + e^{1-u})
        return (amplitude * (u + math.log1p(math.exp(1.0 - u))) ** (-log_exponent)
                + offset * math.exp(-dim * u))

    return _radial_field(profile, log_weight, box_halfwidth, n, dim)
