"""Structure data of the nonlinearity and the exponent bookkeeping built on it.

Exponents are kept as :class:`fractions.Fraction` so that threshold
identities (``r_0 = 1``, ``p = p_HJ``, ...) are decided exactly.  Floats
are converted through their shortest ``repr``, so ``0.5`` becomes ``1/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable

import numpy as np

from .errors import ValidationError

FAMILIES = ("SP", "VHJ", "gCD", "HG", "custom")
INF = math.inf


def to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"expected a finite number, got {x}")
    return Fraction(repr(x))


def multi_indices(dim, order):
    """All multi-indices ``α`` in ``N`` variables with ``|α| = order``."""
    return [a for a in product(range(order + 1), repeat=dim) if sum(a) == order]


@dataclass(frozen=True)
class StructureSpec:
    """Exponent data ``(ℓ, m, n, J, {p_j}, A, {a_α})`` of the structure condition.

    ``p`` maps each ``j ∈ J`` to ``p_j``; ``a`` maps multi-indices
    (tuples of length ``N``) to coefficients.  ``func`` is the nonlinearity
    ``F(t, state)`` for the ``custom`` family; ``flux`` optionally gives
    per-``α`` components ``F_α(t, state)``.
    """

    ell: int
    m: int
    n: int
    p: dict
    A: Fraction = Fraction(0)
    a: dict = field(default_factory=dict)
    family: str = "custom"
    func: Callable | None = None
    flux: Callable | None = None

    def __post_init__(self):
        p = {int(j): to_fraction(v) for j, v in dict(self.p).items()}
        object.__setattr__(self, "p", dict(sorted(p.items())))
        object.__setattr__(self, "A", to_fraction(self.A))
        object.__setattr__(self, "a", {tuple(int(i) for i in k): float(v) for k, v in dict(self.a).items()})
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.ell < 0 or self.m < 0:
            raise ValidationError("ℓ and m must be non-negative integers")
        if not 0 <= self.n <= self.m:
            raise ValidationError(f"reference order n={self.n} must lie in 0..m={self.m}")
        if not self.p:
            raise ValidationError("J must be non-empty")
        for j, pj in self.p.items():
            if not self.n <= j <= self.m:
                raise ValidationError(f"J must be a subset of {{n..m}} = {{{self.n}..{self.m}}}; got j={j}")
            if not pj > 0:
                raise ValidationError(f"exponent p_{j} must be positive")
        if not self.p_abs > 1:
            raise ValidationError(f"|p| = {self.p_abs} must exceed 1")
        if not self.A > -1:
            raise ValidationError(f"time exponent A = {self.A} must exceed -1")
        for alpha in self.a:
            if sum(alpha) != self.ell:
                raise ValidationError(f"multi-index {alpha} does not have order ℓ={self.ell}")
        if self.family == "custom" and self.func is None:
            raise ValidationError("a custom structure needs a nonlinearity function")

    @property
    def J(self):
        return tuple(self.p)

    @property
    def p_abs(self):
        return sum(self.p.values(), Fraction(0))

    def p_bracket(self, n=None):
        """``⟨p⟩_n = n + Σ_j (j - n) p_j``."""
        n = self.n if n is None else n
        return n + sum(((j - n) * pj for j, pj in self.p.items()), Fraction(0))

    @property
    def a_sum(self):
        return float(sum(abs(v) for v in self.a.values()))

    def with_reference_order(self, n):
        return StructureSpec(ell=self.ell, m=self.m, n=n, p=self.p, A=self.A, a=self.a,
                             family=self.family, func=self.func, flux=self.flux)


@dataclass(frozen=True)
class CaseReport:
    dim: int
    order: Fraction
    n: int
    ell: int
    p_abs: Fraction
    A: Fraction
    p_bracket_n: Fraction
    r_n: object  # Fraction or math.inf
    case: str
    kappa: Fraction
    D_m: int
    rho_exponent: Fraction | None = None

    @property
    def r_float(self):
        return math.inf if self.r_n == INF else float(self.r_n)

    def as_dict(self):
        return {"N": self.dim, "d": self.order, "n": self.n, "ell": self.ell, "|p|": self.p_abs,
                "A": self.A, "<p>_n": self.p_bracket_n, "r_n": self.r_n, "case": self.case,
                "kappa": self.kappa, "D_m": self.D_m, "rho_exponent": self.rho_exponent}

    def to_table(self):
        rows = [(k, "inf" if v == INF else str(v)) for k, v in self.as_dict().items()]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def state_length(dim, m):
    """``D_m = 1 + N + ... + N^m``."""
    return m + 1 if dim == 1 else (dim ** (m + 1) - 1) // (dim - 1)


def classify(spec, kernel):
    """Exponent algebra and case of ``spec`` paired with ``kernel`` (a KernelSpec).

    Raises
    ------
    ValidationError
        If ``d <= ℓ + m``, if the time/gradient balance inequality fails,
        or if ``n + ℓ >= d(1 + A)`` (no case applies).
    """
    N = kernel.dim
    d = to_fraction(kernel.order)
    if not d > spec.ell + spec.m:
        raise ValidationError(f"kernel order d={d} must exceed ℓ+m={spec.ell + spec.m}")
    pb = spec.p_bracket()
    budget = d * (1 + spec.A)
    nl = spec.n + spec.ell
    if nl > 0 and not budget >= pb + spec.ell:
        raise ValidationError(f"balance condition violated: d(1+A)={budget} < <p>_n + ℓ = {pb + spec.ell}")
    if nl == 0 and not budget > pb:
        raise ValidationError(f"balance condition violated: d(1+A)={budget} <= <p>_0 = {pb}")
    denom = budget - pb - spec.ell
    r_n = INF if denom == 0 else N * (spec.p_abs - 1) / denom

    if nl > 0:
        if not nl < budget:
            raise ValidationError(f"n+ℓ={nl} >= d(1+A)={budget}: none of the cases applies")
        case = "A"
    elif r_n < 1:
        case = "B"
    elif r_n > 1:
        case = "C"
    else:
        case = "D"

    if r_n == INF:
        kappa = Fraction(0)
    elif r_n < 1:
        kappa = Fraction(N) / d
    else:
        kappa = N / (d * r_n)
    rho = Fraction(N) / (budget - spec.p_bracket(0)) if nl == 0 else None
    return CaseReport(dim=N, order=d, n=spec.n, ell=spec.ell, p_abs=spec.p_abs, A=spec.A,
                      p_bracket_n=pb, r_n=r_n, case=case, kappa=kappa,
                      D_m=state_length(N, spec.m), rho_exponent=rho)


# ---------------------------------------------------------------------------
# Nonlinearities
# ---------------------------------------------------------------------------

def _norm(z, dim):
    z = np.asarray(z, dtype=float)
    if dim == 1 or z.ndim == 0:
        return np.abs(z)
    return np.sqrt(np.sum(z ** 2, axis=0))


def _signed_power(u, p):
    return np.abs(u) ** (p - 1) * u


def envelope(spec, t, state, dim=1):
    """``t^A Π_{j∈J} |z_j|^{p_j}``."""
    out = np.asarray(t, dtype=float) ** float(spec.A)
    for j, pj in spec.p.items():
        out = out * _norm(state[j], dim) ** float(pj)
    return out


def evaluate_nonlinearity(spec, t, state, dim=1):
    """``F(t, z_0, ..., z_m)``; vectorized over trailing grid axes.

    ``state[j]`` holds ``∇^j u``: a scalar/array for ``N = 1`` or ``j = 0``,
    otherwise an array with a leading axis of length ``N^j``.  For the
    divergence families the scalar returned is the flux magnitude in
    ``N > 1`` (``|∇u|^p`` for HG) and the signed flux in ``N = 1``.
    """
    p = float(spec.p_abs)
    fam = spec.family
    if fam == "SP":
        return np.abs(np.asarray(state[0], dtype=float)) ** p
    if fam == "VHJ":
        return _norm(state[1], dim) ** p
    if fam == "gCD":
        return _signed_power(np.asarray(state[0], dtype=float), p)
    if fam == "HG":
        if dim == 1:
            return _signed_power(np.asarray(state[1], dtype=float), p)
        return _norm(state[1], dim) ** p
    return spec.func(t, state)


def flux_components(spec, t, state, dim=1):
    """Map ``α -> F_α`` for every ``α`` with nonzero ``a_α``."""
    if spec.flux is not None:
        return spec.flux(t, state)
    if spec.family == "HG" and dim > 1:
        grad = np.asarray(state[1], dtype=float)
        weight = _norm(grad, dim) ** (float(spec.p_abs) - 1)
        out = {}
        for alpha in spec.a:
            i = alpha.index(1)
            out[alpha] = weight * grad[i]
        return out
    value = evaluate_nonlinearity(spec, t, state, dim)
    return {alpha: value for alpha in spec.a}


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Preset:
    spec: StructureSpec
    derived: dict
    variants: dict

    def classify_all(self, kernel):
        """Case reports for every admissible reference order ``n``."""
        out = {}
        for n, s in self.variants.items():
            try:
                out[n] = classify(s, kernel)
            except ValidationError as exc:
                out[n] = exc
        return out


def preset(family, dim=1, order=2, p=2, ell=1, n=None, coefficients=None):
    """Structure data of one of the application families.

    ``derived`` holds the closed-form thresholds of the family as exact
    fractions (``r_0``, ``r_1``, ``p_HJ``) wherever they are defined.
    """
    d = to_fraction(order)
    p = to_fraction(p)
    N = int(dim)
    if not p > 1:
        raise ValidationError("p must exceed 1")
    e = [tuple(int(i == k) for i in range(N)) for k in range(N)]
    derived = {}
    if family == "SP":
        base = dict(ell=0, m=0, p={0: p}, a={(0,) * N: 1.0})
        ns = (0,)
        derived["r_0"] = N * (p - 1) / d
    elif family == "VHJ":
        if not d > 1:
            raise ValidationError("VHJ needs d > 1")
        base = dict(ell=0, m=1, p={1: p}, a={(0,) * N: 1.0})
        ns = (0, 1)
        if d > p:
            derived["r_0"] = N * (p - 1) / (d - p)
        derived["r_1"] = N * (p - 1) / (d - 1)
        derived["p_HJ"] = (N + d) / (N + 1)
    elif family == "gCD":
        ell = int(ell)
        if not 0 < ell < d:
            raise ValidationError(f"gCD needs 0 < ℓ < d, got ℓ={ell}, d={d}")
        if coefficients is None:
            coefficients = {tuple(ell * x for x in e[0]): 1.0}
        base = dict(ell=ell, m=0, p={0: p}, a=coefficients)
        ns = (0,)
        derived["r_0"] = N * (p - 1) / (d - ell)
    elif family == "HG":
        if not d > 2:
            raise ValidationError("HG needs d > 2")
        base = dict(ell=1, m=1, p={1: p}, a={alpha: -1.0 for alpha in e})
        ns = (0, 1)
        if d > p + 1:
            derived["r_0"] = N * (p - 1) / (d - p - 1)
        elif d == p + 1:
            derived["r_0"] = INF
        derived["r_1"] = N * (p - 1) / (d - 2)
    else:
        raise ValidationError(f"unknown family {family!r}")
    variants = {k: StructureSpec(n=k, family=family, **base) for k in ns}
    chosen = max(ns) if n is None else int(n)
    if chosen not in variants:
        raise ValidationError(f"{family} admits n in {ns}, got n={chosen}")
    return Preset(spec=variants[chosen], derived=derived, variants=variants)
