"""Space-time discretization: periodic grid, graded time mesh and product integration.

The product rule integrates ``∫_0^t (t - s)^{-a} s^b g(s) ds`` for
piecewise-linear ``g`` on the mesh nodes exactly, using incomplete Beta
moments on every subinterval.  Both endpoint singularities are therefore
absorbed into the weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_fn, betainc

from ..errors import CalibrationError, ValidationError
from ..spaces import Field


def graded_mesh(T, t_min_ratio=1e-6, growth=1.1, max_step_ratio=0.01):
    """Nodes ``t_1 < ... < t_M = T`` growing geometrically from ``t_min_ratio·T``.

    Steps are ``(growth - 1) t`` until they reach ``max_step_ratio·T`` and
    constant afterwards; the last step is merged so that ``T`` is a node.
    """
    T = float(T)
    if not (T > 0 and np.isfinite(T)):
        raise ValidationError("horizon T must be positive and finite")
    if not 0 < t_min_ratio < 1 or not growth > 1 or not 0 < max_step_ratio <= 1:
        raise ValidationError("mesh needs 0 < t_min_ratio < 1, growth > 1, 0 < max_step_ratio <= 1")
    t = [t_min_ratio * T]
    cap = max_step_ratio * T
    while True:
        step = min((growth - 1.0) * t[-1], cap)
        nxt = t[-1] + step
        if nxt >= T * (1.0 - 1e-12) or T - nxt < 0.5 * step:
            break
        t.append(nxt)
    t.append(T)
    return np.asarray(t)


def _inc_beta_diff(p, q, x1, x2):
    """``I_{x2}(p, q) - I_{x1}(p, q)``, switching to the complement near 1."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    low = betainc(p, q, x2) - betainc(p, q, x1)
    high = betainc(q, p, 1.0 - x1) - betainc(q, p, 1.0 - x2)
    return np.where(x2 <= 0.5, low, high)


def product_weights(nodes, t, a, b):
    """Weights ``w_k`` with ``Σ w_k g(s_k) = ∫_0^t (t-s)^{-a} s^b g(s) ds`` for hat-function ``g``.

    Parameters
    ----------
    nodes : array_like
        Increasing nodes ``0 = s_0 < ... < s_K = t``.
    a, b : float
        Exponents with ``a < 1`` and ``b > -1``.
    """
    s = np.asarray(nodes, dtype=float)
    if not (a < 1 and b > -1):
        raise CalibrationError(f"Beta weight (t-s)^-{a} s^{b} is not integrable (need a < 1, b > -1)")
    if s[0] != 0.0 or abs(s[-1] - t) > 1e-12 * t or np.any(np.diff(s) <= 0):
        raise ValidationError("product-rule nodes must increase from 0 to t")
    x = s / t
    x[-1] = 1.0
    x1, x2 = x[:-1], x[1:]
    m0 = t ** (1 - a + b) * beta_fn(1 + b, 1 - a) * _inc_beta_diff(1 + b, 1 - a, x1, x2)
    raw1 = t ** (2 - a + b) * beta_fn(2 + b, 1 - a) * _inc_beta_diff(2 + b, 1 - a, x1, x2)
    h = np.diff(s)
    # first moment about the left node, computed against the nearer endpoint
    m1 = raw1 - s[:-1] * m0
    w = np.zeros_like(s)
    w[:-1] += m0 - m1 / h
    w[1:] += m1 / h
    return w


def beta_integral(t, a, b):
    """Closed form ``∫_0^t (t-s)^{-a} s^b ds = t^{1-a+b} B(1-a, 1+b)``."""
    return t ** (1 - a + b) * beta_fn(1 - a, 1 + b)


def calibration_error(nodes, t, a, b):
    """Relative error of the product rule on the Beta monomial and on ``g(s) = s``."""
    w = product_weights(nodes, t, a, b)
    s = np.asarray(nodes, dtype=float)
    e0 = abs(w.sum() / beta_integral(t, a, b) - 1.0)
    e1 = abs((w * s).sum() / beta_integral(t, a, b + 1) - 1.0)
    return max(e0, e1)


@dataclass(frozen=True, eq=False)
class Discretization:
    """Periodic grid ``[-X, X)^N`` with ``n`` points per axis and time nodes ``times``.

    ``eps`` is the clamp level of the truncated nonlinearity; ``None`` ties it
    to the divergence guard (see :func:`~majorant_pde.solver.picard.picard_solve`).
    """

    box_halfwidth: float
    n: int
    times: np.ndarray
    dim: int = 1
    eps: float | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if self.n < 4 or self.n % 2:
            raise ValidationError("grid size n must be an even integer >= 4")
        if self.dim not in (1, 2):
            raise ValidationError(f"unsupported dimension N={self.dim}")
        if not self.box_halfwidth > 0:
            raise ValidationError("box half-width must be positive")
        if t.ndim != 1 or t.size < 2 or t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise ValidationError("time nodes must be positive and increasing")
        if self.eps is not None and not self.eps > 0:
            raise ValidationError("clamp level eps must be positive")

    @classmethod
    def build(cls, box_halfwidth, n, T, dim=1, t_min_ratio=1e-6, growth=1.1, max_step_ratio=0.01,
              eps=None):
        return cls(box_halfwidth=float(box_halfwidth), n=int(n), dim=int(dim),
                   times=graded_mesh(T, t_min_ratio, growth, max_step_ratio), eps=eps)

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def spacing(self):
        return 2.0 * self.box_halfwidth / self.n

    def refined(self):
        """Half the grid spacing and half the mesh grading (growth - 1 and step cap)."""
        t = self.times
        ratio = t[0] / t[-1]
        steps = np.diff(t)
        growth = 1.0 + float(np.max(steps[:5] / t[:5])) if t.size > 5 else 1.1
        cap = float(np.max(steps)) / t[-1]
        return Discretization.build(self.box_halfwidth, 2 * self.n, t[-1], self.dim, ratio,
                                    1.0 + 0.5 * (growth - 1.0), 0.5 * cap, self.eps)

    def field(self, values):
        return Field(values, self.box_halfwidth, self.dim)

    def matches(self, field):
        return (field.dim == self.dim and field.n == self.n
                and abs(field.box_halfwidth - self.box_halfwidth) <= 1e-12 * self.box_halfwidth)

    def duhamel_nodes(self, i):
        """``0, t_1, ..., t_i`` (inclusive) for the time integral ending at node ``i``."""
        return np.concatenate([[0.0], self.times[: i + 1]])

    def duhamel_weights(self, i, a, b):
        return product_weights(self.duhamel_nodes(i), self.times[i], a, b)

    def calibrate(self, pairs, rtol=1e-6, nodes=None):
        """Check the Beta identity for every ``(a, b)`` at the given node indices.

        Returns the worst relative error; raises :class:`CalibrationError` if
        any pair is not integrable or misses ``rtol``.
        """
        idx = range(len(self.times)) if nodes is None else nodes
        worst = 0.0
        for a, b in pairs:
            for i in idx:
                err = calibration_error(self.duhamel_nodes(i), self.times[i], a, b)
                if not err <= rtol:
                    raise CalibrationError(f"product rule misses the Beta identity by {err:.2e} "
                                           f"at t={self.times[i]:.3g}, (a, b)=({a:.4g}, {b:.4g})")
                worst = max(worst, err)
        return worst
