# cython: language_level=3
"""Compiled amplitude kernels.

Each routine fixes the digits it cares about and walks the remaining axes
with an odometer (per-axis counters plus a running flat offset), so the inner
loops do no division.  The signatures mirror :mod:`qrl._fallback` exactly.
"""
import numpy as np

cimport cython


cdef Py_ssize_t[::1] _strides(dims):
    cdef Py_ssize_t n = len(dims)
    cdef Py_ssize_t[::1] out = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t acc = 1
    cdef Py_ssize_t i
    for i in range(n - 1, -1, -1):
        out[i] = acc
        acc *= dims[i]
    return out


cdef inline bint _step(Py_ssize_t* cnt, const Py_ssize_t* fdim, const Py_ssize_t* fstride,
                       Py_ssize_t nf, Py_ssize_t* offset) noexcept nogil:
    """Advance the odometer; False once every combination has been visited."""
    cdef Py_ssize_t j = nf - 1
    while j >= 0:
        cnt[j] += 1
        offset[0] += fstride[j]
        if cnt[j] < fdim[j]:
            return True
        offset[0] -= fdim[j] * fstride[j]
        cnt[j] = 0
        j -= 1
    return False


cdef tuple _free_axes(dims, Py_ssize_t[::1] st, fixed):
    """Dims and strides of the axes not in ``fixed``, plus zeroed counters."""
    free = [i for i in range(len(dims)) if i not in fixed]
    # padded to length one so &buf[0] stays valid when nothing is free
    fdim = np.ones(max(len(free), 1), dtype=np.intp)
    fstride = np.zeros(max(len(free), 1), dtype=np.intp)
    fdim[: len(free)] = [dims[i] for i in free]
    fstride[: len(free)] = [st[i] for i in free]
    return free, fdim, fstride, np.zeros(max(len(free), 1), dtype=np.intp)


def controlled_shift(const double complex[::1] amps, dims, Py_ssize_t control,
                     Py_ssize_t target, bint subtract):
    """Target digit becomes ``c - t`` (subtract) or ``c + t`` modulo the dimension."""
    cdef Py_ssize_t[::1] st = _strides(dims)
    cdef Py_ssize_t d = dims[target]
    cdef Py_ssize_t stt = st[target]
    free, fdim_a, fstride_a, cnt_a = _free_axes(dims, st, (target,))
    cdef Py_ssize_t ci = free.index(control)
    cdef Py_ssize_t[::1] fdim = fdim_a
    cdef Py_ssize_t[::1] fstride = fstride_a
    cdef Py_ssize_t[::1] cnt = cnt_a
    cdef Py_ssize_t nf = len(free)
    out_arr = np.empty(amps.shape[0], dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t off = 0, c, t, nt
    with nogil:
        while True:
            c = cnt[ci]
            for t in range(d):
                if subtract:
                    nt = c - t
                    if nt < 0:
                        nt += d
                else:
                    nt = c + t
                    if nt >= d:
                        nt -= d
                out[off + nt * stt] = amps[off + t * stt]
            if not _step(&cnt[0], &fdim[0], &fstride[0], nf, &off):
                break
    return out_arr


def apply_matrix(const double complex[::1] amps, dims, Py_ssize_t target,
                 const double complex[:, ::1] matrix, condition=()):
    """Apply ``matrix`` on ``target`` wherever all ``(axis, digit)`` conditions hold."""
    cdef Py_ssize_t[::1] st = _strides(dims)
    cdef Py_ssize_t d = dims[target]
    cdef Py_ssize_t stt = st[target]
    cdef Py_ssize_t off = 0
    for axis, digit in condition:
        off += digit * st[axis]
    fixed = (target,) + tuple(a for a, _ in condition)
    free, fdim_a, fstride_a, cnt_a = _free_axes(dims, st, fixed)
    cdef Py_ssize_t[::1] fdim = fdim_a
    cdef Py_ssize_t[::1] fstride = fstride_a
    cdef Py_ssize_t[::1] cnt = cnt_a
    cdef Py_ssize_t nf = len(free)
    # unconditioned gates overwrite every amplitude, so skip the copy
    out_arr = np.array(amps, dtype=np.complex128, copy=True) if condition else np.empty(amps.shape[0], dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef double complex acc
    with nogil:
        while True:
            for r in range(d):
                acc = 0
                for c in range(d):
                    acc = acc + matrix[r, c] * amps[off + c * stt]
                out[off + r * stt] = acc
            if not _step(&cnt[0], &fdim[0], &fstride[0], nf, &off):
                break
    return out_arr


def outcome_probabilities(const double complex[::1] amps, dims, axes):
    """Probability of every digit tuple on ``axes`` (row-major in the given axis order)."""
    cdef Py_ssize_t[::1] st = _strides(dims)
    cdef Py_ssize_t n_axes = len(dims)
    weight_a = np.zeros(n_axes, dtype=np.intp)
    cdef Py_ssize_t size = 1
    for axis in reversed(list(axes)):
        weight_a[axis] = size
        size *= dims[axis]
    cdef Py_ssize_t[::1] weight = weight_a
    cdef Py_ssize_t[::1] dim = np.array(dims, dtype=np.intp)
    cdef Py_ssize_t[::1] cnt = np.zeros(n_axes, dtype=np.intp)
    probs_arr = np.zeros(size, dtype=np.float64)
    cdef double[::1] probs = probs_arr
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t last = n_axes - 1
    cdef Py_ssize_t k = 0, idx = 0, j, run, w_last
    cdef double complex a
    cdef double acc
    run = dim[last]
    w_last = weight[last]
    with nogil:
        while k < n:
            # innermost axis handled as one contiguous run
            if w_last == 0:
                acc = 0
                for j in range(run):
                    a = amps[k + j]
                    acc += a.real * a.real + a.imag * a.imag
                probs[idx] += acc
            else:
                for j in range(run):
                    a = amps[k + j]
                    probs[idx + j * w_last] += a.real * a.real + a.imag * a.imag
            k += run
            j = last - 1
            while j >= 0:
                cnt[j] += 1
                idx += weight[j]
                if cnt[j] < dim[j]:
                    break
                idx -= dim[j] * weight[j]
                cnt[j] = 0
                j -= 1
    return probs_arr


def collapse(const double complex[::1] amps, dims, axes, digits):
    """Zero every amplitude whose digits on ``axes`` differ from ``digits``."""
    cdef Py_ssize_t[::1] st = _strides(dims)
    cdef Py_ssize_t off = 0
    for axis, digit in zip(axes, digits):
        off += digit * st[axis]
    free, fdim_a, fstride_a, cnt_a = _free_axes(dims, st, tuple(axes))
    cdef Py_ssize_t[::1] fdim = fdim_a
    cdef Py_ssize_t[::1] fstride = fstride_a
    cdef Py_ssize_t[::1] cnt = cnt_a
    cdef Py_ssize_t nf = len(free)
    out_arr = np.zeros(amps.shape[0], dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    with nogil:
        while True:
            out[off] = amps[off]
            if not _step(&cnt[0], &fdim[0], &fstride[0], nf, &off):
                break
    return out_arr
