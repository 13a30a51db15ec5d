"""Compiled kernels for the dense complex eigenvalue solver.

Balancing (Parlett-Reinsch, radix 2), Householder reduction to upper
Hessenberg form, then single-shift complex QR with Wilkinson shifts and
deflation of negligible subdiagonal entries. Eigenvectors are not formed,
so each QR sweep only touches the active diagonal block.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NO_CONVERGENCE = 1
STATUS_NOT_FINITE = 2


@njit(cache=True, nogil=True)
def _l1(z):
    return abs(z.real) + abs(z.imag)


@njit(cache=True, nogil=True)
def balance(a):
    n = a.shape[0]
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += _l1(a[j, i])
                    r += _l1(a[i, j])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c >= g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                for j in range(n):
                    a[i, j] /= f
                for j in range(n):
                    a[j, i] *= f


@njit(cache=True, nogil=True)
def hessenberg(a):
    n = a.shape[0]
    v = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        norm_x = 0.0
        for i in range(k + 1, n):
            norm_x += a[i, k].real ** 2 + a[i, k].imag ** 2
        norm_x = np.sqrt(norm_x)
        tail = 0.0
        for i in range(k + 2, n):
            tail += abs(a[i, k])
        if tail == 0.0:
            continue
        x0 = a[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * norm_x
        vnorm = 0.0
        for i in range(k + 1, n):
            v[i] = a[i, k]
        v[k + 1] -= alpha
        for i in range(k + 1, n):
            vnorm += v[i].real ** 2 + v[i].imag ** 2
        vnorm = np.sqrt(vnorm)
        for i in range(k + 1, n):
            v[i] /= vnorm
        # A <- (I - 2 v v^H) A
        for j in range(k, n):
            s = 0.0 + 0.0j
            for i in range(k + 1, n):
                s += np.conj(v[i]) * a[i, j]
            for i in range(k + 1, n):
                a[i, j] -= 2.0 * v[i] * s
        # A <- A (I - 2 v v^H)
        for i in range(n):
            s = 0.0 + 0.0j
            for j in range(k + 1, n):
                s += a[i, j] * v[j]
            for j in range(k + 1, n):
                a[i, j] -= 2.0 * s * np.conj(v[j])
        a[k + 1, k] = alpha
        for i in range(k + 2, n):
            a[i, k] = 0.0


@njit(cache=True, nogil=True)
def _wilkinson(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mean = 0.5 * (a + d)
    mu1 = mean + disc
    mu2 = mean - disc
    if abs(mu1 - d) <= abs(mu2 - d):
        return mu1
    return mu2


@njit(cache=True, nogil=True)
def hessenberg_qr(h, tol, max_sweeps, eig):
    """Eigenvalues of upper Hessenberg ``h`` (overwritten).

    Returns ``(status, sweeps, max_neglected, hi)``; on failure ``hi`` is the
    last row of the undeflated block and ``eig[hi+1:]`` holds what converged.
    """
    n = h.shape[0]
    cs = np.empty(n, dtype=np.complex128)
    sn = np.empty(n, dtype=np.complex128)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += h[i, j].real ** 2 + h[i, j].imag ** 2
    fro = np.sqrt(fro)
    if not np.isfinite(fro):
        return STATUS_NOT_FINITE, 0, 0.0, n - 1
    max_neglected = 0.0
    sweeps = 0
    its = 0
    hi = n - 1
    while hi >= 0:
        l = hi
        while l > 0:
            s = abs(h[l, l - 1])
            ref = abs(h[l - 1, l - 1]) + abs(h[l, l])
            if ref == 0.0:
                ref = fro
            if s <= tol * ref:
                if s > max_neglected:
                    max_neglected = s
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            eig[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        if sweeps >= max_sweeps:
            return STATUS_NO_CONVERGENCE, sweeps, max_neglected, hi
        if its == 10 or its == 20:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = _wilkinson(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        for i in range(l, hi + 1):
            h[i, i] -= mu
        # H - mu I = Q R via Givens rotations on the active block
        for k in range(l, hi):
            x = h[k, k]
            y = h[k + 1, k]
            r = np.sqrt(x.real ** 2 + x.imag ** 2 + y.real ** 2 + y.imag ** 2)
            if r == 0.0:
                c = 1.0 + 0.0j
                s_ = 0.0 + 0.0j
            else:
                c = x / r
                s_ = y / r
            cs[k] = c
            sn[k] = s_
            for j in range(k, hi + 1):
                t1 = h[k, j]
                t2 = h[k + 1, j]
                h[k, j] = np.conj(c) * t1 + np.conj(s_) * t2
                h[k + 1, j] = -s_ * t1 + c * t2
        # R Q
        for k in range(l, hi):
            c = cs[k]
            s_ = sn[k]
            top = k + 2 if k + 2 <= hi else hi
            for i in range(l, top + 1):
                t1 = h[i, k]
                t2 = h[i, k + 1]
                h[i, k] = t1 * c + t2 * s_
                h[i, k + 1] = -t1 * np.conj(s_) + t2 * np.conj(c)
        for i in range(l, hi + 1):
            h[i, i] += mu
        sweeps += 1
        its += 1
    return STATUS_OK, sweeps, max_neglected, -1
