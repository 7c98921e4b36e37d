# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Metropolis and exhaustive-search kernels over integer couplings.

``W`` is the symmetric pair-coupling matrix ``K + K.T`` with a zero
diagonal, so ``E(s) = -s.W.s / 2`` and flipping spin ``i`` costs
``2 * s_i * (W s)_i``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def anneal_one(const cnp.int64_t[:, ::1] W, cnp.int8_t[::1] s,
               const double[:, ::1] uniforms, const double[::1] betas):
    """One Metropolis anneal, sweeping spins in index order.

    ``s`` is updated in place to the final state. ``uniforms[t, i]`` is the
    acceptance draw for spin ``i`` in sweep ``t``.

    Returns:
        ``(best_state, best_energy, final_energy)`` where ``final_energy`` is
        the incrementally tracked value.
    """
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t sweeps = betas.shape[0]
    cdef Py_ssize_t t, i, j
    cdef cnp.int64_t[::1] field = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t e = 0, best_e, de, acc
    cdef double beta
    cdef int si

    for i in range(n):
        acc = 0
        for j in range(n):
            acc += W[i, j] * s[j]
        field[i] = acc
        e -= s[i] * acc
    e //= 2
    best = np.asarray(s).copy()
    cdef cnp.int8_t[::1] best_v = best
    best_e = e

    for t in range(sweeps):
        beta = betas[t]
        for i in range(n):
            si = s[i]
            de = 2 * si * field[i]
            if de <= 0 or uniforms[t, i] < exp(-beta * de):
                s[i] = -si
                e += de
                for j in range(n):
                    field[j] -= 2 * si * W[j, i]
        if e < best_e:
            best_e = e
            for j in range(n):
                best_v[j] = s[j]
    return best, best_e, e


def exhaustive_min(const cnp.int64_t[:, ::1] W):
    """Exact minimum over all configs by Gray-code traversal.

    Bit ``n-1-i`` of the returned mask is set when spin ``i`` is -1; among
    equal energies the smallest mask wins.
    """
    cdef Py_ssize_t n = W.shape[0]
    cdef Py_ssize_t i, j, p
    cdef cnp.int64_t[::1] field = np.zeros(n, dtype=np.int64)
    cdef cnp.int8_t[::1] s = np.ones(n, dtype=np.int8)
    cdef cnp.int64_t e = 0, best_e
    cdef long long t, total = 1LL << n, mask = 0, best_mask = 0
    cdef int si

    for i in range(n):
        for j in range(n):
            field[i] += W[i, j]
        e -= field[i]
    e //= 2
    best_e = e
    for t in range(1, total):
        p = 0
        while not (t >> p) & 1:
            p += 1
        i = n - 1 - p
        si = s[i]
        e += 2 * si * field[i]
        s[i] = -si
        for j in range(n):
            field[j] -= 2 * si * W[j, i]
        mask ^= 1LL << p
        if e < best_e or (e == best_e and mask < best_mask):
            best_e = e
            best_mask = mask
    return best_mask, best_e
