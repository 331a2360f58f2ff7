"""Compiled loops for the closed-form tensor and force.

For every (group element, left component, right component) triple the site
overlaps ``O_i`` are formed once, then the leave-out products

* ``loo1[i]    = prod_{mu != i} O_mu``
* ``loo2[i, j] = prod_{mu not in {i, j}} O_mu``
* leave-three-out products per bond, built on the fly

come from running prefix/suffix products.  The loops run serially in a fixed
order, so results are bit-reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TWELVE_PI = 12.0 * np.pi
TWENTYFOUR_PI = 24.0 * np.pi
TWO_LOCAL_NORM = 288.0 * np.pi**2


@njit(cache=True)
def _overlaps(mk, mr, out):
    n = mk.shape[0]
    for i in range(n):
        out[i] = (3.0 + mk[i, 0] * mr[i, 0] + mk[i, 1] * mr[i, 1] + mk[i, 2] * mr[i, 2]) / TWELVE_PI


@njit(cache=True)
def _leave_out(o, pre, suf, loo1, loo2):
    n = o.shape[0]
    pre[0] = 1.0
    for i in range(1, n + 1):
        pre[i] = pre[i - 1] * o[i - 1]
    suf[n] = 1.0
    for i in range(n - 1, -1, -1):
        suf[i] = suf[i + 1] * o[i]
    for i in range(n):
        loo1[i] = pre[i] * suf[i + 1]
    for i in range(n):
        loo2[i, i] = 0.0
        run = 1.0
        for j in range(i + 1, n):
            v = pre[i] * run * suf[j + 1]
            loo2[i, j] = v
            loo2[j, i] = v
            run *= o[j]
    return pre[n]


@njit(cache=True)
def tensor(c, m, perms):
    K, N = m.shape[0], m.shape[1]
    G = perms.shape[0]
    P = K + 3 * K * N
    T = np.zeros((P, P))
    mr = np.empty((N, 3))
    o = np.empty(N)
    pre = np.empty(N + 1)
    suf = np.empty(N + 1)
    loo1 = np.empty(N)
    loo2 = np.empty((N, N))
    inv12 = 1.0 / TWELVE_PI
    inv144 = inv12 * inv12
    for g in range(G):
        for k in range(K):
            mk = m[k]
            for l in range(K):
                for i in range(N):
                    for a in range(3):
                        mr[i, a] = m[l, perms[g, i], a]
                _overlaps(mk, mr, o)
                full = _leave_out(o, pre, suf, loo1, loo2)
                T[k, l] += full
                ckl = c[k] * c[l]
                row0 = K + 3 * N * k
                col0 = K + 3 * N * l
                for i in range(N):
                    ri = row0 + 3 * i
                    w = c[k] * loo1[i] * inv12
                    for a in range(3):
                        T[ri + a, l] += w * mr[i, a]
                    # same-site second derivative of O_i
                    cj = col0 + 3 * perms[g, i]
                    d = ckl * loo1[i] * inv12
                    for a in range(3):
                        T[ri + a, cj + a] += d
                    for j in range(N):
                        if j == i:
                            continue
                        coef = ckl * loo2[i, j] * inv144
                        cj = col0 + 3 * perms[g, j]
                        for a in range(3):
                            u = coef * mr[i, a]
                            for b in range(3):
                                T[ri + a, cj + b] += u * mk[j, b]
    for r in range(K, P):
        for l in range(K):
            T[l, r] = T[r, l]
    T /= G
    return 0.5 * (T + T.T)


@njit(cache=True)
def force(c, m, perms, edges, g_field, gamma, v_eff):
    K, N = m.shape[0], m.shape[1]
    G = perms.shape[0]
    E = edges.shape[0]
    fc = np.zeros(K)
    fm = np.zeros((K, N, 3))
    mr = np.empty((N, 3))
    o = np.empty(N)
    ob = np.empty(N)
    pre = np.empty(N + 1)
    suf = np.empty(N + 1)
    pre3 = np.empty(N + 1)
    suf3 = np.empty(N + 1)
    loo1 = np.empty(N)
    loo2 = np.empty((N, N))
    grad1 = np.empty((N, 3))
    k1 = np.empty(N)
    d_o = np.empty(N)
    local = np.empty((N, 3))
    fscale = g_field / TWELVE_PI
    dscale = gamma / TWENTYFOUR_PI
    vscale = v_eff / TWO_LOCAL_NORM
    inv12 = 1.0 / TWELVE_PI
    for g in range(G):
        for k in range(K):
            mk = m[k]
            for l in range(K):
                for i in range(N):
                    for a in range(3):
                        mr[i, a] = m[l, perms[g, i], a]
                _overlaps(mk, mr, o)
                _leave_out(o, pre, suf, loo1, loo2)
                s = 0.0
                for i in range(N):
                    grad1[i, 0] = -dscale * mr[i, 0]
                    grad1[i, 1] = -fscale * mr[i, 2] - dscale * mr[i, 1]
                    grad1[i, 2] = fscale * mr[i, 1] - dscale * (2.0 * mr[i, 2] + 2.0)
                    k1[i] = mk[i, 0] * grad1[i, 0] + mk[i, 1] * grad1[i, 1] + mk[i, 2] * grad1[i, 2]
                    s += k1[i] * loo1[i]
                for a in range(N):
                    acc = 0.0
                    for i in range(N):
                        acc += k1[i] * loo2[i, a]
                    d_o[a] = acc
                    for b in range(3):
                        local[a, b] = grad1[a, b] * loo1[a]
                for e in range(E):
                    i = edges[e, 0]
                    j = edges[e, 1]
                    wi = mk[j, 2] + 3.0 * mr[j, 2]
                    wj = mk[i, 2] + 3.0 * mr[i, 2]
                    czi = mr[i, 0] * mk[i, 1] - mr[i, 1] * mk[i, 0]
                    czj = mr[j, 0] * mk[j, 1] - mr[j, 1] * mk[j, 0]
                    k2 = vscale * (wi * czi + wj * czj)
                    pe = loo2[i, j]
                    s += k2 * pe
                    local[i, 0] += pe * vscale * (-wi * mr[i, 1])
                    local[i, 1] += pe * vscale * (wi * mr[i, 0])
                    local[i, 2] += pe * vscale * czj
                    local[j, 0] += pe * vscale * (-wj * mr[j, 1])
                    local[j, 1] += pe * vscale * (wj * mr[j, 0])
                    local[j, 2] += pe * vscale * czi
                    if k2 == 0.0:
                        continue
                    for mu in range(N):
                        ob[mu] = o[mu]
                    ob[i] = 1.0
                    ob[j] = 1.0
                    pre3[0] = 1.0
                    for mu in range(1, N + 1):
                        pre3[mu] = pre3[mu - 1] * ob[mu - 1]
                    suf3[N] = 1.0
                    for mu in range(N - 1, -1, -1):
                        suf3[mu] = suf3[mu + 1] * ob[mu]
                    for a in range(N):
                        if a != i and a != j:
                            d_o[a] += k2 * pre3[a] * suf3[a + 1]
                fc[k] += c[l] * s
                ckl = c[k] * c[l]
                for a in range(N):
                    for b in range(3):
                        fm[k, a, b] += ckl * (local[a, b] + d_o[a] * mr[a, b] * inv12)
    out = np.empty(K + 3 * K * N)
    out[:K] = fc / G
    out[K:] = fm.reshape(-1) / G
    return out
