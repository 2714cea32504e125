"""Fundamental solutions of ``u_t + (-Δ)^{d/2} u = 0`` in one and two dimensions.

Every kernel is evaluated from a *unit-time profile*: the radial function
``p(r) = G(r, 1)`` and its radial derivatives, computed once by oscillatory
quadrature of the Fourier representation and then interpolated.  Space-time
values follow from self-similarity::

    ∂^j G(x, t) = t^{-(N + j)/d} (∂^j p)(t^{-1/d} x)

For fractional orders ``0 < d < 2`` (and any order that is not an even
integer) the kernel has an algebraic tail ``~ r^{-N-d}``; for even integer
orders it decays like ``exp(-c r^{d/(d-1)})`` and changes sign when ``d > 2``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize, special
from scipy.interpolate import CubicHermiteSpline

from .errors import CertificationError, QuadratureError, ValidationError

SUPPORTED_DIMS = (1, 2)
# cap on radii x frequency-node matrix entries held at once
_MAX_ENTRIES = 2_000_000


def is_even_integer(order):
    return abs(order - round(order)) < 1e-12 and int(round(order)) % 2 == 0


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of a kernel satisfying the decay/regularity/semigroup conditions.

    ``order`` is the ``d`` of the time scaling ``t^{1/d}``; ``decay_exponent``
    is the extra algebraic decay ``L`` in the pointwise bound; ``horizon`` is
    the maximal time ``T_*`` (``math.inf`` allowed).
    """

    dim: int
    order: float
    decay_exponent: float
    horizon: float = math.inf
    regularity_budget: int = 2

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ValidationError(f"unsupported dimension N={self.dim}; expected one of {SUPPORTED_DIMS}")
        if not self.order > 0:
            raise ValidationError(f"kernel order must be positive, got d={self.order}")
        if not self.decay_exponent > 0:
            raise ValidationError(f"decay exponent must be positive, got L={self.decay_exponent}")
        if not self.horizon > 0:
            raise ValidationError(f"horizon must be positive, got T_*={self.horizon}")
        if self.regularity_budget < 0:
            raise ValidationError("regularity budget must be non-negative")
        if self.dim == 2 and self.regularity_budget > 2:
            raise ValidationError("N=2 profiles support derivative orders j <= 2")

    def check_structure(self, ell, m):
        """Reject a pairing with a nonlinearity needing ``ell + m`` derivatives."""
        if not self.order > ell + m:
            raise ValidationError(f"kernel order d={self.order} must exceed ell+m={ell + m}")
        if self.regularity_budget < ell + m:
            raise ValidationError(
                f"regularity budget {self.regularity_budget} is below ell+m={ell + m}")


@dataclass(frozen=True)
class Resolution:
    """Quadrature and sampling parameters for :func:`make_profile`.

    ``r_max=None`` picks 200 for algebraic tails and 40 for even orders.
    The quadrature tolerance is relative to ``|p(0)|``; the interpolation
    tolerance is relative to the largest sample of each derivative row.
    """

    r_max: float | None = None
    n_radii: int = 1201
    gl_order: int = 20
    cutoff_tol: float = 1e-16
    quad_tol: float = 1e-10
    interp_tol: float = 1e-7
    verify: bool = True

    def radius_limit(self, order):
        if self.r_max is not None:
            return float(self.r_max)
        return 40.0 if is_even_integer(order) else 200.0


# ---------------------------------------------------------------------------
# Oscillatory quadrature
# ---------------------------------------------------------------------------

def frequency_cutoff(order, dim, jmax, tol):
    """Smallest ``X >= 1`` with ``exp(-X^d) X^(jmax + N) <= tol``."""
    power = jmax + dim

    def excess(x):
        return -x ** order + power * math.log(x) - math.log(tol)

    hi = 2.0
    while excess(hi) > 0:
        hi *= 2.0
    if excess(1.0) <= 0:
        return 1.0
    return optimize.brentq(excess, 1.0, hi, xtol=1e-12)


def _panel_nodes(order, r_top, cutoff, gl_order):
    g, w = leggauss(gl_order)
    width = min(1.0, 2.0 * math.pi / max(r_top, 1e-12))
    edges = np.arange(0.0, cutoff + width, width)
    edges[-1] = cutoff
    edges = edges[edges <= cutoff]
    if edges[-1] < cutoff:
        edges = np.append(edges, cutoff)
    if not is_even_integer(order):
        # exp(-|ξ|^d) is not smooth at ξ = 0; grade the first panel geometrically
        first = edges[1]
        geo = first * 0.15 ** np.arange(1, 21)
        edges = np.concatenate([[0.0], geo[::-1], edges[1:]])
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    xi = (half[:, None] * g[None, :] + 0.5 * (a + b)[:, None]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return xi, wt


def _bessel_derivatives(x, jmax):
    """``J0^{(j)}(x)`` for ``j = 0..jmax`` (``jmax <= 3``) with small-x series."""
    j0 = special.j0(x)
    j1 = special.j1(x)
    out = [j0]
    if jmax >= 1:
        out.append(-j1)
    if jmax >= 2 or jmax >= 3:
        small = x < 0.05
        xs = np.where(small, 1.0, x)
        j1_over_x = np.where(small, 0.5 - x ** 2 / 16 + x ** 4 / 384, j1 / xs)
        if jmax >= 2:
            out.append(-j0 + j1_over_x)
        if jmax >= 3:
            rest = np.where(small, -x / 8 + x ** 3 / 96 - 3 * x ** 5 / 9216,
                            j0 / xs - 2 * j1 / xs ** 2)
            out.append(j1 + rest)
    if jmax > 3:
        raise ValidationError("N=2 radial derivatives are available up to order 3")
    return out


def radial_transform(order, dim, radii, jmax, cutoff, gl_order=20, chunk=64):
    """Radial derivatives ``∂_r^j p(r)``, ``j = 0..jmax``, of the unit-time kernel.

    ``p(r) = (2π)^{-N} ∫ exp(i x·ξ - |ξ|^d) dξ`` with ``|x| = r``.  In one
    dimension this is a cosine transform; in two dimensions the angular
    integral is done analytically, leaving a Hankel transform against ``J0``.
    """
    radii = np.asarray(radii, dtype=float)
    out = np.empty((jmax + 1, radii.size))
    order_idx = np.argsort(radii)
    for sl in np.array_split(order_idx, max(1, math.ceil(radii.size / chunk))):
        if sl.size == 0:
            continue
        xi, wt = _panel_nodes(order, radii[sl].max(), cutoff, gl_order)
        base = wt * np.exp(-xi ** order)
        rows = max(1, _MAX_ENTRIES // xi.size)
        for start in range(0, sl.size, rows):
            sub = sl[start:start + rows]
            out[:, sub] = _transform_rows(dim, radii[sub], xi, base, jmax)
    return out


def _transform_rows(dim, rr, xi, base, jmax):
    out = np.empty((jmax + 1, rr.size))
    phase = np.outer(rr, xi)
    if dim == 1:
        cos_m = np.cos(phase)
        sin_m = np.sin(phase)
        for j in range(jmax + 1):
            w_j = base * xi ** j
            if j % 2 == 0:
                out[j] = (-1) ** (j // 2) * (cos_m @ w_j) / math.pi
            else:
                out[j] = (-1) ** ((j + 1) // 2) * (sin_m @ w_j) / math.pi
    elif dim == 2:
        bess = _bessel_derivatives(phase, jmax)
        for j in range(jmax + 1):
            out[j] = (bess[j] @ (base * xi ** (j + 1))) / (2 * math.pi)
    else:
        raise ValidationError(f"unsupported dimension N={dim}")
    return out


# ---------------------------------------------------------------------------
# Tails
# ---------------------------------------------------------------------------

def _falling(a, j):
    """``d^j/dr^j r^{-a} = _falling(a, j) r^{-a-j}``."""
    c = 1.0
    for k in range(j):
        c *= -(a + k)
    return c


def algebraic_tail_coefficients(dim, order, terms=4):
    """Large-``r`` expansion ``p(r) ~ Σ_k c_k r^{-N - k d}`` of a non-even-order kernel.

    ``c_k = π^{-N/2-1} (-1)^{k+1}/k! Γ((kd+N)/2) Γ(1+kd/2) sin(kπd/2) 2^{kd}``.
    """
    powers, coef = [], []
    for k in range(1, terms + 1):
        c = ((-1) ** (k + 1) / math.factorial(k) * math.gamma(0.5 * (k * order + dim))
             * math.gamma(1 + 0.5 * k * order) * math.sin(0.5 * k * math.pi * order)
             * 2.0 ** (k * order) * math.pi ** (-0.5 * dim - 1))
        powers.append(dim + k * order)
        coef.append(c)
    return powers, coef


def _algebraic_tail(dim, order, r_last, value):
    powers, coef = algebraic_tail_coefficients(dim, order)
    model = sum(c * r_last ** -a for a, c in zip(powers, coef))
    mismatch = abs(model - value) / abs(value) if value else math.inf
    return {"kind": "algebraic", "powers": powers, "coef": coef, "mismatch": float(mismatch)}


def _fit_envelope_tail(order, radii, values, peak):
    """Fit ``|∂^j p| ≈ A exp(-b r^k)``, ``k = d/(d-1)``, per derivative order."""
    k = order / (order - 1.0)
    amps, rates, signs = [], [], []
    for row in values:
        mag = np.abs(row)
        usable = mag > 1e-13 * peak
        if usable.sum() < 4:
            amps.append(0.0)
            rates.append(1.0)
            signs.append(1.0)
            continue
        last = np.nonzero(usable)[0][-1]
        lo = radii[last] * 0.5
        sel = np.nonzero(usable & (radii >= lo) & (radii > 1.0))[0]
        if sel.size >= 3:
            # local maxima of |p| trace the envelope of an oscillating tail
            inner = sel[(sel > 0) & (sel < radii.size - 1)]
            peaks = inner[(mag[inner] >= mag[inner - 1]) & (mag[inner] >= mag[inner + 1])]
            if peaks.size >= 2:
                sel = peaks
        if sel.size < 2:
            sel = np.nonzero(usable)[0][-4:]
        xs = radii[sel] ** k
        ys = np.log(mag[sel])
        slope, intercept = np.polyfit(xs, ys, 1)
        rate = max(-slope, 1e-6)
        amps.append(float(math.exp(intercept)))
        rates.append(float(rate))
        signs.append(float(np.sign(row[last]) or 1.0))
    return {"kind": "envelope", "exponent": k, "amp": amps, "rate": rates, "sign": signs}


# ---------------------------------------------------------------------------
# Profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Profile:
    """Unit-time radial profile of a kernel with tail model.

    ``values[j]`` holds ``∂_r^j p`` at ``radii`` for ``j = 0..budget + 1``;
    the extra top row only feeds the Hermite interpolant of row ``budget``.
    """

    dim: int
    order: float
    radii: np.ndarray
    values: np.ndarray
    tail: dict
    cutoff: float
    tolerance: float
    quad_error: float = 0.0
    interp_error: float = 0.0
    resolution: dict = field(default_factory=dict)

    @property
    def regularity_budget(self):
        return self.values.shape[0] - 2

    @property
    def samples(self):
        return self.values[0]

    @property
    def deriv_samples(self):
        return self.values[1:self.regularity_budget + 1]

    @property
    def r_max(self):
        return float(self.radii[-1])

    @property
    def peak(self):
        return float(abs(self.values[0, 0]))

    @property
    def tail_power(self):
        if self.tail["kind"] == "algebraic":
            return self.tail["powers"][0]
        return math.inf

    @property
    def sign_changing(self):
        return bool(np.min(self.values[0]) < -1e-12 * self.peak)

    @cached_property
    def _splines(self):
        return [CubicHermiteSpline(self.radii, self.values[j], self.values[j + 1])
                for j in range(self.regularity_budget + 1)]

    def _tail_values(self, r, j):
        if self.tail["kind"] == "algebraic":
            return sum(c * _falling(a, j) * r ** (-a - j)
                       for a, c in zip(self.tail["powers"], self.tail["coef"]))
        k = self.tail["exponent"]
        return self.tail["sign"][j] * self.tail["amp"][j] * np.exp(-self.tail["rate"][j] * r ** k)

    def radial(self, r, j=0):
        """``∂_r^j p(r)`` for ``r >= 0``, interpolated inside and tail-extended outside."""
        if not 0 <= j <= self.regularity_budget:
            raise ValidationError(f"derivative order j={j} outside 0..{self.regularity_budget}")
        r = np.asarray(r, dtype=float)
        inside = r <= self.r_max
        out = np.empty_like(r)
        if np.any(inside):
            out[inside] = self._splines[j](r[inside])
        if np.any(~inside):
            out[~inside] = self._tail_values(r[~inside], j)
        return out

    def abs_mass_beyond(self, radius):
        """``∫_{|z| > radius} |p(z)| dz`` (used to monitor box truncation)."""
        surface = 2.0 if self.dim == 1 else 2.0 * math.pi
        total = 0.0
        if radius < self.r_max:
            rr = np.linspace(max(radius, 0.0), self.r_max, 4001)
            vals = np.abs(self.radial(rr)) * rr ** (self.dim - 1)
            total += np.trapezoid(vals, rr)
        r0 = max(radius, self.r_max)
        if self.tail["kind"] == "algebraic":
            n = self.dim
            total += sum(abs(c) * r0 ** (n - a) / (a - n)
                         for a, c in zip(self.tail["powers"], self.tail["coef"]))
        else:
            rr = np.linspace(r0, r0 + 40.0, 2001)
            total += np.trapezoid(np.abs(self._tail_values(rr, 0)) * rr ** (self.dim - 1), rr)
        return surface * float(total)

    # -- persistence -------------------------------------------------------

    def save(self, path):
        """Write the columnar cache file (metadata as leading comment lines)."""
        path = Path(path)
        meta = {
            "dim": self.dim,
            "order": repr(float(self.order)),
            "cutoff": repr(float(self.cutoff)),
            "tolerance": repr(float(self.tolerance)),
            "quad_error": repr(float(self.quad_error)),
            "interp_error": repr(float(self.interp_error)),
            "tail": json.dumps(self.tail, sort_keys=True),
            "resolution": json.dumps(self.resolution, sort_keys=True),
        }
        cols = ["radius", "value"] + [f"d{j}" for j in range(1, self.values.shape[0])]
        lines = [f"# {k}: {v}" for k, v in meta.items()]
        lines.append(",".join(cols))
        table = np.vstack([self.radii, self.values]).T
        lines.extend(",".join(f"{v:.17g}" for v in row) for row in table)
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        meta = {}
        rows = []
        for line in Path(path).read_text().splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif line.startswith("radius"):
                continue
            elif line:
                rows.append([float(v) for v in line.split(",")])
        table = np.array(rows)
        return cls(
            dim=int(meta["dim"]),
            order=float(meta["order"]),
            radii=table[:, 0].copy(),
            values=table[:, 1:].T.copy(),
            tail=json.loads(meta["tail"]),
            cutoff=float(meta["cutoff"]),
            tolerance=float(meta["tolerance"]),
            quad_error=float(meta["quad_error"]),
            interp_error=float(meta["interp_error"]),
            resolution=json.loads(meta["resolution"]),
        )


def _radius_grid(r_max, n, order=1.0):
    # small orders have rapidly growing derivatives at the origin
    a = min(1.0, order ** 3)
    s = np.linspace(0.0, math.asinh(r_max / a), n)
    r = a * np.sinh(s)
    r[-1] = r_max
    return r


def _cache_name(dim, order, budget, resolution):
    key = json.dumps({"dim": dim, "order": repr(float(order)), "budget": budget,
                      "res": asdict(resolution)}, sort_keys=True)
    digest = hashlib.sha1(key.encode()).hexdigest()[:12]
    return f"profile_N{dim}_d{float(order):g}_j{budget}_{digest}.csv"


def make_profile(spec, dim=1, budget=2, resolution=None, cache_dir=None):
    """Compute the unit-time profile of ``G_d`` (``d`` = order) by quadrature.

    Parameters
    ----------
    spec : KernelSpec or float
        Either a full kernel spec or just the order ``d`` (``θ`` for fractional kernels).
    dim, budget : int
        Used only when ``spec`` is a bare order.  ``budget`` is the highest
        derivative order that will be evaluated.
    resolution : Resolution, optional
    cache_dir : path-like, optional
        When given, profiles are read from / written to this directory.

    Raises
    ------
    QuadratureError
        If a refined quadrature disagrees with the production one beyond
        ``resolution.quad_tol``, or the interpolant misses held-out radii by
        more than ``resolution.interp_tol``.
    """
    if isinstance(spec, KernelSpec):
        order, dim, budget = float(spec.order), spec.dim, spec.regularity_budget
    else:
        order = float(spec)
        if not order > 0:
            raise ValidationError(f"kernel order must be positive, got {order}")
        KernelSpec(dim=dim, order=order, decay_exponent=1.0, regularity_budget=budget)
    resolution = resolution or Resolution()

    if cache_dir is not None:
        cache_path = Path(cache_dir) / _cache_name(dim, order, budget, resolution)
        if cache_path.exists():
            return Profile.load(cache_path)

    jmax = budget + 1
    r_max = resolution.radius_limit(order)
    radii = _radius_grid(r_max, resolution.n_radii, order)
    cutoff = frequency_cutoff(order, dim, jmax, resolution.cutoff_tol)
    values = radial_transform(order, dim, radii, jmax, cutoff, resolution.gl_order)
    peak = abs(values[0, 0])

    quad_error = interp_error = 0.0
    if resolution.verify:
        idx = np.unique(np.linspace(0, radii.size - 1, 24).astype(int))
        mids_idx = np.unique(np.linspace(0, radii.size - 2, 48).astype(int))
        mids = 0.5 * (radii[mids_idx] + radii[mids_idx + 1])
        fine_cut = frequency_cutoff(order, dim, jmax, resolution.cutoff_tol * 1e-2)
        check_r = np.concatenate([radii[idx], mids])
        fine = radial_transform(order, dim, check_r, jmax, fine_cut, 2 * resolution.gl_order)
        coarse = values[:, idx]
        quad_error = float(np.max(np.abs(fine[:, :idx.size] - coarse)) / peak)
        if quad_error > resolution.quad_tol:
            worst = np.unravel_index(np.argmax(np.abs(fine[:, :idx.size] - coarse)), coarse.shape)
            raise QuadratureError(
                f"quadrature refinement disagrees by {quad_error:.3e} (relative to peak) "
                f"at r={radii[idx][worst[1]]:.6g}, j={worst[0]}",
                estimates=(float(coarse[worst]), float(fine[:, :idx.size][worst])))
        splines = [CubicHermiteSpline(radii, values[j], values[j + 1]) for j in range(budget + 1)]
        interp = np.array([s(mids) for s in splines])
        row_scale = np.max(np.abs(values[:budget + 1]), axis=1, keepdims=True)
        interp_error = float(np.max(np.abs(interp - fine[:budget + 1, idx.size:]) / row_scale))
        if interp_error > resolution.interp_tol:
            raise QuadratureError(
                f"interpolation error {interp_error:.3e} at held-out radii exceeds "
                f"{resolution.interp_tol:.1e}; increase n_radii",
                estimates=(interp_error, resolution.interp_tol))

    if is_even_integer(order):
        tail = _fit_envelope_tail(order, radii, values[:budget + 1], peak)
    else:
        tail = _algebraic_tail(dim, order, radii[-1], values[0, -1])
        if tail["mismatch"] > 1e-3:
            raise QuadratureError(
                f"tail expansion misses the last sample by {tail['mismatch']:.2e}; increase r_max",
                estimates=(float(values[0, -1]), tail["mismatch"]))

    profile = Profile(dim=dim, order=order, radii=radii, values=values, tail=tail,
                      cutoff=cutoff, tolerance=max(quad_error, interp_error),
                      quad_error=quad_error, interp_error=interp_error,
                      resolution=asdict(resolution))
    if not np.all(np.isfinite(values)):
        raise QuadratureError("non-finite profile samples")
    if order < 2 and np.min(values[0]) <= 0:
        raise QuadratureError(
            f"fractional profile must be positive; min sample {np.min(values[0]):.3e} "
            f"(increase r_max or resolution)")
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        profile.save(cache_path)
    return profile


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _radial_tensor_norm(profile, r, j):
    """Frobenius norm of ``∇^j`` of a radial function in two dimensions."""
    if j == 0:
        return profile.radial(r, 0)
    f1 = profile.radial(r, 1)
    if j == 1:
        return np.abs(f1)
    if j == 2:
        f2 = profile.radial(r, 2)
        safe = np.where(r > 0, r, 1.0)
        f1_over_r = np.where(r > 0, f1 / safe, f2)
        return np.sqrt(f2 ** 2 + f1_over_r ** 2)
    raise ValidationError("N=2 kernels support derivative orders j <= 2")


def eval_kernel(profile, j, x, t):
    """Evaluate ``∇^j G(x, t)`` through self-similar scaling of the profile.

    In one dimension the signed derivative ``∂_x^j G`` is returned.  In two
    dimensions ``x`` has trailing axis of length 2 and, for ``j >= 1``, the
    Frobenius norm ``|∇^j G|`` is returned.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("kernel time must be positive")
    if not 0 <= j <= profile.regularity_budget:
        raise ValidationError(f"derivative order j={j} outside 0..{profile.regularity_budget}")
    d = profile.order
    n = profile.dim
    x = np.asarray(x, dtype=float)
    scale = t ** (-1.0 / d)
    if n == 1:
        z = x * scale
        val = profile.radial(np.abs(z), j)
        if j % 2 == 1:
            val = val * np.sign(z)
    else:
        r = np.linalg.norm(x, axis=-1) * scale
        val = _radial_tensor_norm(profile, r, j)
    return t ** (-(n + j) / d) * val


def kernel_mass(profile):
    """``∫ G(x, 1) dx`` including the tail beyond the last sample."""
    r = profile.radii
    if profile.dim == 1:
        interior = CubicHermiteSpline(r, profile.values[0], profile.values[1]).integrate(0.0, r[-1])
        surface = 2.0
    else:
        interior = CubicHermiteSpline(r, r * profile.values[0],
                                      profile.values[0] + r * profile.values[1]).integrate(0.0, r[-1])
        surface = 2.0 * math.pi
    tail = profile.tail
    n = profile.dim
    if tail["kind"] == "algebraic":
        rest = sum(c * r[-1] ** (n - a) / (a - n) for a, c in zip(tail["powers"], tail["coef"]))
    else:
        rr = np.linspace(r[-1], r[-1] + 40.0, 2001)
        rest = np.trapezoid(profile._tail_values(rr, 0) * rr ** (n - 1), rr)
    return float(surface * (interior + rest))


# ---------------------------------------------------------------------------
# Pointwise kernel bound certification
# ---------------------------------------------------------------------------

@dataclass
class GCertificate:
    C_G: float
    L: float
    per_order: list
    argmax: tuple
    n_samples: int

    def report(self):
        lines = [f"C_G: {self.C_G:.10g}", f"L: {self.L:.10g}", f"samples: {self.n_samples}"]
        for j, c in enumerate(self.per_order):
            lines.append(f"C_G_j{j}: {c:.10g}")
        x, t, j = self.argmax
        lines.append(f"argmax: x={np.array2string(np.atleast_1d(x), precision=6)} t={t:.6g} j={j}")
        return "\n".join(lines)


def tail_growth(z, ratio, factor=1.1):
    """True when the per-dyadic-shell maximum of ``ratio`` keeps growing at large ``z``.

    A bound that holds only because the sample set stops early shows up as a
    ratio increasing across the outermost shells.
    """
    z = np.asarray(z)
    ratio = np.asarray(ratio)
    keep = z > 0
    if keep.sum() < 3:
        return False
    shells = np.floor(np.log2(z[keep])).astype(int)
    vals = ratio[keep]
    ids = np.unique(shells)
    if ids.size < 3 or 2.0 ** ids[-1] < 8:
        return False
    maxima = np.array([vals[shells == s].max() for s in ids[-3:]])
    return bool(maxima[2] > maxima[1] > maxima[0] and maxima[2] > factor * maxima[0])


def certify_condition_G(profile, spec, samples, j_max=None, cap=1e12):
    """Smallest ``C_G`` with ``|∇^j G| <= C_G t^{-(N+j)/d}(1 + t^{-1/d}|x|)^{-N-L-j}`` on the samples.

    Raises
    ------
    CertificationError
        When the ratio exceeds ``cap`` or grows across the outermost sampled
        scales (a sign that ``L`` is too large or the profile too short).
    """
    d = profile.order
    n = profile.dim
    L = float(spec.decay_exponent)
    j_max = profile.regularity_budget if j_max is None else j_max
    x = samples.x if n > 1 else samples.x[:, 0]
    t = samples.t
    dist = np.abs(x) if n == 1 else np.linalg.norm(x, axis=-1)
    z = dist * t ** (-1.0 / d)
    per_order, best = [], (None, None, None)
    best_val = -1.0
    for j in range(j_max + 1):
        g = np.abs(eval_kernel(profile, j, x, t))
        bound = t ** (-(n + j) / d) * (1.0 + z) ** (-n - L - j)
        ratio = g / bound
        if not np.all(np.isfinite(ratio)) or ratio.max() > cap:
            raise CertificationError(
                f"pointwise kernel bound fails for j={j}: ratio {ratio.max():.3e} exceeds cap {cap:.1e}")
        if tail_growth(z, ratio):
            raise CertificationError(
                f"pointwise kernel bound ratio grows at large |x| for j={j}; L={L} too large "
                f"or resolution insufficient")
        k = int(np.argmax(ratio))
        per_order.append(float(ratio[k]))
        if ratio[k] > best_val:
            best_val = float(ratio[k])
            best = (samples.x[k], float(t[k]), j)
    return GCertificate(C_G=best_val, L=L, per_order=per_order, argmax=best,
                        n_samples=int(t.size))
