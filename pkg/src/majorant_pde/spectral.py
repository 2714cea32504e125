"""Fourier multipliers on the periodic grid of a :class:`~majorant_pde.spaces.Field`."""
from __future__ import annotations

from itertools import product

import numpy as np


def wavenumber_norm(field):
    """``|ξ|`` on the FFT grid."""
    ks = field.wavenumbers()
    if field.dim == 1:
        return np.abs(ks[0])
    return np.sqrt(ks[0] ** 2 + ks[1] ** 2)


def tensor_indices(dim, j):
    """Component index tuples ``(i_1, ..., i_j)`` of ``∇^j`` in row-major order."""
    return list(product(range(dim), repeat=j))


def alpha_of(indices, dim):
    """Multi-index counting how often each axis appears in ``indices``."""
    return tuple(sum(1 for i in indices if i == k) for k in range(dim))


def derivative_multiplier(field, alpha):
    """``Π_k (i ξ_k)^{α_k}``, with the Nyquist mode removed along odd-order axes."""
    ks = field.wavenumbers()
    n = field.n
    out = np.ones((n,) * field.dim, dtype=complex)
    for axis, (k, a) in enumerate(zip(ks, alpha)):
        if a == 0:
            continue
        factor = (1j * k) ** a
        if a % 2 == 1 and n % 2 == 0:
            factor = factor.copy()
            idx = [slice(None)] * factor.ndim
            idx[axis] = n // 2
            factor[tuple(idx)] = 0.0
        out = out * factor
    return out


def derivative_tensor(field, values_hat, j):
    """Real-space components of ``∇^j`` for a transformed field.

    Returns an array of shape ``grid`` when ``N = 1`` or ``j = 0`` and
    ``(N^j, *grid)`` otherwise.
    """
    if field.dim == 1 or j == 0:
        alpha = (j,) if field.dim == 1 else (0,) * field.dim
        return np.real(np.fft.ifftn(values_hat * derivative_multiplier(field, alpha)))
    comps = [np.real(np.fft.ifftn(values_hat * derivative_multiplier(field, alpha_of(ix, field.dim))))
             for ix in tensor_indices(field.dim, j)]
    return np.stack(comps)


def tensor_norm(arr, dim, j):
    """Pointwise Euclidean norm of a ``∇^j`` array as laid out by :func:`derivative_tensor`."""
    if dim == 1 or j == 0:
        return np.abs(arr)
    return np.sqrt(np.sum(arr ** 2, axis=0))
