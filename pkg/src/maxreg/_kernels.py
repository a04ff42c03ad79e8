"""Compiled propagation kernels for the cell-exact convolution schemes.

All four kernels consume a stack of per-cell propagator matrices
``props[k] = exp(-(t_{k+1} - t_k) A)`` and per-node source vectors.  The
recursions cost O(N) matrix-vector products; the scans cost O(N^2) because
every source is propagated to every node independently, with no state shared
between output nodes.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def recurse_forward(props, sources):
    # u_0 = s_0;  u_k = props[k-1] u_{k-1} + s_k
    n, d = sources.shape
    out = np.empty((n, d), dtype=np.complex128)
    u = sources[0].copy()
    out[0] = u
    for k in range(1, n):
        P = props[k - 1]
        nxt = np.empty(d, dtype=np.complex128)
        for a in range(d):
            acc = sources[k, a]
            for b in range(d):
                acc += P[a, b] * u[b]
            nxt[a] = acc
        u = nxt
        out[k] = u
    return out


@njit(cache=True, nogil=True)
def recurse_backward(props, sources):
    # v_{N-1} = s_{N-1};  v_k = props[k] v_{k+1} + s_k
    n, d = sources.shape
    out = np.empty((n, d), dtype=np.complex128)
    v = sources[n - 1].copy()
    out[n - 1] = v
    for k in range(n - 2, -1, -1):
        P = props[k]
        nxt = np.empty(d, dtype=np.complex128)
        for a in range(d):
            acc = sources[k, a]
            for b in range(d):
                acc += P[a, b] * v[b]
            nxt[a] = acc
        v = nxt
        out[k] = v
    return out


@njit(cache=True, nogil=True)
def scan_forward(props, sources):
    # out[k] = sum_{j <= k} props[k-1] ... props[j] sources[j],
    # each term propagated on its own (no Horner reuse across nodes).
    n, d = sources.shape
    out = np.zeros((n, d), dtype=np.complex128)
    active = np.zeros((n, d), dtype=np.complex128)
    tmp = np.empty(d, dtype=np.complex128)
    for k in range(n):
        if k > 0:
            P = props[k - 1]
            for j in range(k):
                for a in range(d):
                    acc = 0.0 + 0.0j
                    for b in range(d):
                        acc += P[a, b] * active[j, b]
                    tmp[a] = acc
                active[j] = tmp
        active[k] = sources[k]
        for j in range(k + 1):
            for a in range(d):
                out[k, a] += active[j, a]
    return out


@njit(cache=True, nogil=True)
def scan_backward(props, sources):
    # out[k] = sum_{j >= k} props[k] ... props[j-1] sources[j]
    n, d = sources.shape
    out = np.zeros((n, d), dtype=np.complex128)
    active = np.zeros((n, d), dtype=np.complex128)
    tmp = np.empty(d, dtype=np.complex128)
    for k in range(n - 1, -1, -1):
        if k < n - 1:
            P = props[k]
            for j in range(k + 1, n):
                for a in range(d):
                    acc = 0.0 + 0.0j
                    for b in range(d):
                        acc += P[a, b] * active[j, b]
                    tmp[a] = acc
                active[j] = tmp
        active[k] = sources[k]
        for j in range(k, n):
            for a in range(d):
                out[k, a] += active[j, a]
    return out
