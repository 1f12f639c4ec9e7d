"""Compiled Dormand-Prince 5(4) stepping for linear, quasi-periodic generators

    dc/dt = sum_k phase_k(t) * A_k c,   phase_0 = 1,  phase_k = exp(i w_k t),

stored as one CSR matrix whose entries carry the index ``k`` of their term.
After every accepted step the state is made Hermitian through the adjoint
index map ``adj`` (c <- (c + conj(c[adj])) / 2).
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK, BUDGET, UNDERFLOW, NONFINITE = 0, 1, 2, 3

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_E = np.array([35 / 384 - 5179 / 57600, 0.0, 500 / 1113 - 7571 / 16695, 125 / 192 - 393 / 640,
               -2187 / 6784 + 92097 / 339200, 11 / 84 - 187 / 2100, -1 / 40])


@njit(cache=True)
def _rhs(t, c, indptr, indices, data, term, freqs, out):
    coef = np.empty(freqs.size + 1, dtype=np.complex128)
    coef[0] = 1.0
    for k in range(freqs.size):
        coef[k + 1] = np.exp(1j * freqs[k] * t)
    for row in range(indptr.size - 1):
        acc = 0j
        for nz in range(indptr[row], indptr[row + 1]):
            acc += coef[term[nz]] * data[nz] * c[indices[nz]]
        out[row] = acc


@njit(cache=True)
def integrate_segment(c, t, t_end, h, rtol, atol, max_steps, indptr, indices, data, term, freqs,
                      adj, A, C, E):
    """Advance ``c`` (in place) from ``t`` to ``t_end``.

    Returns (t, h, steps, status); ``h`` is the proposed next step.
    """
    n = c.size
    K = np.empty((7, n), dtype=np.complex128)
    y = np.empty(n, dtype=np.complex128)
    _rhs(t, c, indptr, indices, data, term, freqs, K[0])
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            return t, h, steps, BUDGET
        h_try = min(h, t_end - t)
        last = h_try < h
        if h_try < 1e-14 * max(1.0, abs(t)):
            return t, h, steps, UNDERFLOW
        for s in range(1, 7):
            for i in range(n):
                acc = c[i]
                for j in range(s):
                    if A[s, j] != 0.0:
                        acc += h_try * A[s, j] * K[j, i]
                y[i] = acc
            _rhs(t + C[s] * h_try, y, indptr, indices, data, term, freqs, K[s])
        err2 = 0.0
        for i in range(n):
            e = 0j
            for j in range(7):
                if E[j] != 0.0:
                    e += E[j] * K[j, i]
            e *= h_try
            sc = atol + rtol * max(abs(c[i]), abs(y[i]))
            err2 += (abs(e) / sc) ** 2
        err = np.sqrt(err2 / n)
        if not np.isfinite(err):
            return t, h, steps, NONFINITE
        if err <= 1.0:
            t += h_try
            for i in range(n):
                c[i] = y[i]
            for i in range(n):
                j = adj[i]
                if j >= i:
                    a = 0.5 * (c[i] + np.conj(c[j]))
                    c[i] = a
                    c[j] = np.conj(a)
            for i in range(n):
                K[0, i] = K[6, i]
            steps += 1
            fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
            if not (last and fac > 1.0):
                h = h_try * fac
        else:
            h = h_try * max(0.2, 0.9 * err ** -0.25)
    return t, h, steps, OK
