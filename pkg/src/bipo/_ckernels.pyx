# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled twins of the loops in ``_pykernels``.

Arithmetic is written in the same order as the numpy versions so results
are bit-identical; the extension is built with -ffp-contract=off.
"""

import numpy as np

from cython.parallel cimport prange
from libc.math cimport INFINITY, isfinite


def conjugate_brute(const double[::1] x, const double[::1] f, const double[::1] y, int nthreads=1):
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], i, j, bi
    cdef double best, v
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    cdef double[::1] o = out
    cdef long long[::1] a = arg
    for j in prange(m, nogil=True, num_threads=nthreads, schedule="static"):
        best = -INFINITY
        bi = -1
        for i in range(n):
            if not isfinite(f[i]):
                continue
            v = y[j] * x[i] - f[i]
            if bi < 0 or v > best:
                best = v
                bi = i
        o[j] = best
        a[j] = bi
    return out, arg


def conjugate_fast(const double[::1] x, const double[::1] f, const double[::1] y, int nthreads=1):
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], i, j, k, t, lo = -1, hi = -1
    cdef double cur, v, yj
    for k in range(n):
        if isfinite(f[k]):
            if lo < 0:
                lo = k
            hi = k
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    cdef double[::1] o = out
    cdef long long[::1] a = arg
    i = lo
    with nogil:
        for j in range(m):
            yj = y[j]
            cur = yj * x[i] - f[i]
            k = i + 1
            while k <= hi:
                v = yj * x[k] - f[k]
                if v > cur:
                    i = k
                    cur = v
                    k += 1
                elif v == cur:
                    t = k + 1
                    while t <= hi and yj * x[t] - f[t] == cur:
                        t += 1
                    if t <= hi and yj * x[t] - f[t] > cur:
                        i = t
                        cur = yj * x[t] - f[t]
                        k = t + 1
                    else:
                        break
                else:
                    break
            o[j] = cur
            a[j] = i
    return out, arg


def synth_min(const double[:, ::1] phi, const double[:, ::1] ps, double tie_tol, int nthreads=1):
    cdef Py_ssize_t K = phi.shape[0], n = phi.shape[1], m = ps.shape[1], i, j, k, bk
    cdef double best, v, thr
    b = np.empty((n, m))
    arg = np.empty((n, m), dtype=np.int64)
    cdef double[:, ::1] bo = b
    cdef long long[:, ::1] ao = arg
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        for j in range(m):
            best = INFINITY
            for k in range(K):
                v = phi[k, i] + ps[k, j]
                if v < best:
                    best = v
            bk = -1
            if isfinite(best):
                thr = best + tie_tol
                for k in range(K):
                    if phi[k, i] + ps[k, j] <= thr:
                        bk = k
                        break
            bo[i, j] = best
            ao[i, j] = bk
    return b, arg


def fan_best(const double[:, ::1] F, const long long[:, ::1] pairs, const double[::1] alphas, int nthreads=1):
    cdef Py_ssize_t W = F.shape[0], V = F.shape[1], P = pairs.shape[0], A = alphas.shape[0]
    cdef Py_ssize_t p, ia, w, v, w1, w2, bw, hot, c
    cdef double al, bt, mx, r, bst
    best = np.empty((P, A))
    arg = np.empty((P, A), dtype=np.int64)
    cdef double[:, ::1] bo = best
    cdef long long[:, ::1] ao = arg
    for p in prange(P, nogil=True, num_threads=nthreads, schedule="dynamic"):
        w1 = pairs[p, 0]
        w2 = pairs[p, 1]
        c = w2
        for ia in range(A):
            al = alphas[ia]
            bt = 1.0 - al
            # incumbent: the previous weight's winner, scanned in full
            bst = -INFINITY
            for v in range(V):
                r = F[c, v] - (al * F[w1, v] + bt * F[w2, v])
                if r > bst:
                    bst = r
                    hot = v
            bw = c
            for w in range(W):
                if w == c:
                    continue
                # prune once w can neither go below bst nor tie it with a smaller index
                r = F[w, hot] - (al * F[w1, hot] + bt * F[w2, hot])
                if r > bst or (r >= bst and w > bw):
                    continue
                mx = -INFINITY
                for v in range(V):
                    r = F[w, v] - (al * F[w1, v] + bt * F[w2, v])
                    if r > mx:
                        mx = r
                        if mx > bst or (mx >= bst and w > bw):
                            hot = v
                            break
                if mx < bst or (mx == bst and w < bw):
                    bst = mx
                    bw = w
            bo[p, ia] = bst
            ao[p, ia] = bw
            c = bw
    return best, arg
