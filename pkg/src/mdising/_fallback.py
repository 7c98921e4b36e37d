"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same arguments, same results bit for bit; used when the extension is not
built or ``MDISING_PURE_PYTHON`` is set.
"""
from math import exp

import numpy as np


def anneal_one(W, s, uniforms, betas):
    n = s.shape[0]
    Wl = np.asarray(W).tolist()
    cur = [int(x) for x in s]
    field = [sum(w * x for w, x in zip(row, cur)) for row in Wl]
    e = -sum(x * f for x, f in zip(cur, field)) // 2
    best = list(cur)
    best_e = e
    for t, beta in enumerate(np.asarray(betas).tolist()):
        u = uniforms[t].tolist()
        for i in range(n):
            si = cur[i]
            de = 2 * si * field[i]
            if de <= 0 or u[i] < exp(-beta * de):
                cur[i] = -si
                e += de
                col = 2 * si
                for j, w in enumerate(Wl[i]):
                    if w:
                        field[j] -= col * w
        if e < best_e:
            best_e = e
            best = list(cur)
    s[:] = cur
    return np.array(best, dtype=np.int8), best_e, e


def exhaustive_min(W):
    W = np.asarray(W, dtype=np.int64)
    n = W.shape[0]
    best_mask, best_e = 0, None
    chunk = 1 << 14
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)[None, :]
    for start in range(0, 1 << n, chunk):
        k = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)[:, None]
        S = 1 - 2 * ((k >> shifts) & 1)
        e = -np.einsum("ki,ki->k", S @ W, S) // 2
        idx = int(np.argmin(e))
        if best_e is None or e[idx] < best_e:
            best_e, best_mask = int(e[idx]), start + idx
    return best_mask, best_e
