"""Numpy implementations of the hot loops.

Every function here has a twin in ``_ckernels.pyx`` that performs the same
floating point operations in the same order, so the two backends agree bit
for bit. ``nthreads`` is accepted for signature parity and ignored.
"""

import numpy as np

_CHUNK = 1 << 22  # elements per temporary block


def conjugate_brute(x, f, y, nthreads=1):
    x = np.asarray(x, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    idx = np.flatnonzero(np.isfinite(f))
    xs, fs = x[idx], f[idx]
    m = y.shape[0]
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    step = max(1, _CHUNK // max(1, idx.size))
    for s in range(0, m, step):
        v = y[s:s + step, None] * xs[None, :] - fs[None, :]
        a = np.argmax(v, axis=1)
        out[s:s + step] = v[np.arange(v.shape[0]), a]
        arg[s:s + step] = idx[a]
    return out, arg


def conjugate_fast(x, f, y, nthreads=1):
    """Monotone-argmax sweep; valid for discretely convex ``f`` and increasing ``y``."""
    x = np.asarray(x, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    fin = np.flatnonzero(np.isfinite(f))
    lo, hi = int(fin[0]), int(fin[-1])
    xl = x.tolist()
    fl = f.tolist()
    m = y.shape[0]
    out = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    i = lo
    for j, yj in enumerate(y.tolist()):
        cur = yj * xl[i] - fl[i]
        k = i + 1
        while k <= hi:
            v = yj * xl[k] - fl[k]
            if v > cur:
                i, cur = k, v
                k += 1
            elif v == cur:
                # walk across a plateau looking for a strict rise
                t = k + 1
                while t <= hi and yj * xl[t] - fl[t] == cur:
                    t += 1
                if t <= hi and yj * xl[t] - fl[t] > cur:
                    i, cur = t, yj * xl[t] - fl[t]
                    k = t + 1
                else:
                    break
            else:
                break
        out[j] = cur
        arg[j] = i
    return out, arg


def synth_min(phi, phi_star, tie_tol, nthreads=1):
    phi = np.asarray(phi, dtype=np.float64)
    ps = np.asarray(phi_star, dtype=np.float64)
    K, n = phi.shape
    m = ps.shape[1]
    b = np.empty((n, m))
    arg = np.empty((n, m), dtype=np.int64)
    step = max(1, _CHUNK // max(1, K * m))
    for s in range(0, n, step):
        t = phi[:, s:s + step, None] + ps[:, None, :]
        best = t.min(axis=0)
        hit = t <= (best + tie_tol)[None]
        a = np.argmax(hit, axis=0)
        a[np.isinf(best)] = -1
        b[s:s + step] = best
        arg[s:s + step] = a
    return b, arg


def fan_best(F, pairs, alphas, nthreads=1):
    """For each (pair, alpha) the witness minimizing the worst-case residual.

    residual(w) = max_v F[w, v] - (a F[w1, v] + (1 - a) F[w2, v]).
    """
    F = np.asarray(F, dtype=np.float64)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    alphas = np.asarray(alphas, dtype=np.float64)
    W, V = F.shape
    P, A = pairs.shape[0], alphas.shape[0]
    best = np.empty((P, A))
    arg = np.empty((P, A), dtype=np.int64)
    step = max(1, _CHUNK // max(1, W * V))
    F1 = F[pairs[:, 0]]
    F2 = F[pairs[:, 1]]
    for ia, a in enumerate(alphas.tolist()):
        bta = 1.0 - a
        for s in range(0, P, step):
            comb = a * F1[s:s + step] + bta * F2[s:s + step]
            r = (F[None, :, :] - comb[:, None, :]).max(axis=2)
            w = np.argmin(r, axis=1)
            best[s:s + step, ia] = r[np.arange(r.shape[0]), w]
            arg[s:s + step, ia] = w
    return best, arg
