"""Pure numpy implementations of the amplitude kernels.

Used when the compiled :mod:`qrl._core` extension is unavailable or when
``QRL_PURE_PYTHON=1`` is set.  Semantics match the compiled versions exactly.
"""
from __future__ import annotations

import numpy as np


def _strides(dims):
    out = [1] * len(dims)
    for i in range(len(dims) - 2, -1, -1):
        out[i] = out[i + 1] * dims[i + 1]
    return out


def controlled_shift(amps, dims, control, target, subtract):
    st = _strides(dims)
    d = dims[target]
    k = np.arange(amps.shape[0])
    c = (k // st[control]) % d
    t = (k // st[target]) % d
    nt = (c - t) % d if subtract else (c + t) % d
    out = np.empty_like(amps)
    out[k + (nt - t) * st[target]] = amps
    return out


def apply_matrix(amps, dims, target, matrix, condition=()):
    psi = np.array(amps, dtype=np.complex128).reshape(dims)
    index = [slice(None)] * len(dims)
    for axis, digit in condition:
        index[axis] = digit
    # integer indices drop axes; locate target inside the remaining view
    t = target - sum(1 for axis, _ in condition if axis < target)
    view = psi[tuple(index)]
    moved = np.moveaxis(view, t, 0)
    updated = np.tensordot(matrix, moved, axes=(1, 0))
    psi[tuple(index)] = np.moveaxis(updated, 0, t)
    return psi.reshape(-1)


def outcome_probabilities(amps, dims, axes):
    p = (np.abs(amps) ** 2).reshape(dims)
    axes = list(axes)
    rest = tuple(i for i in range(len(dims)) if i not in axes)
    marg = p.sum(axis=rest)
    # remaining axes are in layout order; reorder to the requested order
    order = sorted(axes)
    marg = np.transpose(marg, [order.index(a) for a in axes])
    return np.ascontiguousarray(marg).reshape(-1)


def collapse(amps, dims, axes, digits):
    psi = np.asarray(amps).reshape(dims)
    out = np.zeros_like(psi)
    index = [slice(None)] * len(dims)
    for axis, digit in zip(axes, digits):
        index[axis] = digit
    out[tuple(index)] = psi[tuple(index)]
    return out.reshape(-1)
