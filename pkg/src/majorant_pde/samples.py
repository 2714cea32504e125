"""Space-time sample sets for certifying kernel bounds.

Samples are Latin-hypercube draws over log-spaced scales of the
self-similar variable ``z = t^{-1/d}|x|`` and of ``t``, augmented by
adversarial points near ``z ≈ 1`` (where the ratios usually peak) and at
``z = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import ValidationError


@dataclass(frozen=True)
class SampleSet:
    """Points ``x`` (shape ``(n, N)``), times ``t`` and optional split times ``s < t``."""

    x: np.ndarray
    t: np.ndarray
    s: np.ndarray | None = None

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[0] != self.t.shape[0]:
            raise ValidationError("sample x must have shape (n, N) matching t")
        if np.any(self.t <= 0):
            raise ValidationError("sample times must be positive")
        if self.s is not None and np.any((self.s <= 0) | (self.s >= self.t)):
            raise ValidationError("split times must satisfy 0 < s < t")

    def __len__(self):
        return int(self.t.size)

    @property
    def dim(self):
        return self.x.shape[1]


def _directions(rng, n, dim):
    if dim == 1:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def kernel_samples(order, dim=1, n=512, z_range=(1e-3, 1e3), t_range=(1e-3, 1e2),
                   n_adversarial=64, seed=0):
    """Latin-hypercube sample of ``(x, t)`` with ``z = t^{-1/d}|x|`` log-uniform.

    ``n`` random points are drawn; ``n_adversarial`` more are placed at
    ``z ∈ [1/4, 4]`` and a handful at ``z = 0``.  Doubling ``n`` refines the
    sample without moving the adversarial points.
    """
    if n < 1:
        raise ValidationError("sample count must be positive")
    rng = np.random.default_rng(seed)
    lhs = qmc.LatinHypercube(d=2, seed=rng).random(n)
    lz = np.log(z_range[0]) + lhs[:, 0] * np.log(z_range[1] / z_range[0])
    lt = np.log(t_range[0]) + lhs[:, 1] * np.log(t_range[1] / t_range[0])
    z = np.exp(lz)
    t = np.exp(lt)

    adv_rng = np.random.default_rng(seed + 7919)
    za = np.exp(np.linspace(np.log(0.25), np.log(4.0), n_adversarial))
    ta = np.exp(adv_rng.uniform(np.log(t_range[0]), np.log(t_range[1]), n_adversarial))
    t0 = np.geomspace(t_range[0], t_range[1], 5)
    z = np.concatenate([z, za, np.zeros_like(t0)])
    t = np.concatenate([t, ta, t0])
    x = _directions(rng, z.size, dim) * (z * t ** (1.0 / order))[:, None]
    return SampleSet(x=x, t=t)


def composition_samples(order, dim=1, n=128, z_range=(1e-2, 1e2), t_range=(1e-2, 1e2),
                        seed=0):
    """Samples ``(x, s, t)`` with ``s/t`` spread over ``(0, 1)`` including ``s = t/2``."""
    rng = np.random.default_rng(seed)
    lhs = qmc.LatinHypercube(d=3, seed=rng).random(n)
    z = np.exp(np.log(z_range[0]) + lhs[:, 0] * np.log(z_range[1] / z_range[0]))
    t = np.exp(np.log(t_range[0]) + lhs[:, 1] * np.log(t_range[1] / t_range[0]))
    frac = 0.02 + 0.96 * lhs[:, 2]
    frac[::4] = 0.5
    z = np.concatenate([z, [0.0, 0.0, 1.0]])
    t = np.concatenate([t, [1.0, 1.0, 1.0]])
    frac = np.concatenate([frac, [0.5, 0.1, 0.5]])
    x = _directions(rng, z.size, dim) * (z * t ** (1.0 / order))[:, None]
    return SampleSet(x=x, t=t, s=frac * t)
