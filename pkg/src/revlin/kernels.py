"""Streaming numba kernels for chain simulation and weighted accumulation.

Each Monte Carlo replicate walks its chain once across the weight window
and accumulates the weighted sums for every grid point in one pass, so a
window of 1e7 indices never materializes per-replicate paths. The outer
loop is chunked over the window so the weight-prefix slices stay cache
resident while all replicates sweep through them.

Random words follow the counter-based layout of rng.py exactly; the
consumption order per replicate is part of the documented sampler
contract (see below per chain) and the pure-Python mirrors in the test
suite reproduce these streams bit for bit.

Word layout per replicate substream:

    Metropolis-Hastings chain (stationary start):
      counter 0: word -> initial draw: |x| = u^(1/a), sign = bit 0
      per emitted index: 2 words. The first drives the hold test
      u <= |gamma|; the second is the redraw candidate |x| = u^(1/(a+1)),
      sign = bit 0, adopted only when the test succeeds. Both words are
      consumed either way, so the counter advances by a fixed stride and
      the inner loop carries no data-dependent branch.

    Gaussian AR(1) chain:
      counters 0,1: Box-Muller normal -> gamma (stationary N(0,1))
      per step: 2 words -> innovation normal

    Random walk on Z_m:
      counter 0: uniform start floor(u * m)
      per step: 1 word -> step value by CDF inversion

The chain transitions after each emission, so emission k uses the state
reached after k transitions from the stationary initial draw.

Accumulation is plain float64 in fixed ascending window order. At the
largest acceptance scales the accumulated rounding error is ~1e-10
relative, far below Monte Carlo noise; linproc.partial_sum carries the
compensated-summation contract for materialized windows.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
GOLDEN = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_U53 = 2.0**-53

CHUNK = 8192


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _M1
    z = (z ^ (z >> U64(27))) * _M2
    return z ^ (z >> U64(31))


@njit(inline="always")
def _word(key, ctr):
    return _mix64(key + GOLDEN * (ctr + U64(1)))


@njit(inline="always")
def _unit(w):
    return (np.float64(w >> U64(11)) + 1.0) * _U53


@njit(inline="always")
def _signed_pow(w, expo):
    """Magnitude u^expo with the sign from bit 0 of the raw word."""
    u = _unit(w)
    if expo == 1.0:
        mag = u
    elif expo == 0.5:
        mag = np.sqrt(u)
    else:
        mag = u**expo
    if (w & U64(1)) == U64(1):
        return mag
    return -mag


# ---------------------------------------------------------------------------
# Metropolis-Hastings chain on [-1, 1]


@njit(inline="always")
def _g_of(x, q):
    if q == 1.0:
        return x
    ax = abs(x)
    gx = ax**q
    return gx if x >= 0.0 else -gx


@njit(cache=True)
def mh_path(key, count, inv_a, inv_a1, q):
    """Emit (gamma, xi) for `count` indices of one substream."""
    gamma = np.empty(count)
    xi = np.empty(count)
    w = _word(key, U64(0))
    c = U64(1)
    x = _signed_pow(w, inv_a)
    for k in range(count):
        gamma[k] = x
        xi[k] = _g_of(x, q)
        if _unit(_word(key, c)) <= abs(x):
            x = _signed_pow(_word(key, c + U64(1)), inv_a1)
        c += U64(2)
    return gamma, xi


@njit(cache=True)
def mh_paths_batch(keys, count, inv_a, inv_a1, q):
    out = np.empty((keys.shape[0], count))
    for r in range(keys.shape[0]):
        _, xi = mh_path(keys[r], count, inv_a, inv_a1, q)
        out[r] = xi
    return out


@njit(cache=True)
def mh_sums(keys, inv_a, inv_a1, q, P, offs, W, out):
    """out[r, g] = sum_k (P[k+offs[g]] - P[k]) * xi_k for each replicate."""
    R = keys.shape[0]
    G = offs.shape[0]
    st_x = np.empty(R)
    st_c = np.empty(R, dtype=np.uint64)
    for r in range(R):
        w = _word(keys[r], U64(0))
        st_x[r] = _signed_pow(w, inv_a)
        st_c[r] = U64(1)
    out[:, :] = 0.0
    k0 = 0
    while k0 < W:
        k1 = min(k0 + CHUNK, W)
        for r in range(R):
            key = keys[r]
            c = st_c[r]
            x = st_x[r]
            ax = abs(x)
            g = _g_of(x, q)
            if G == 1:
                o0 = offs[0]
                a0 = out[r, 0]
                for k in range(k0, k1):
                    a0 += g * (P[k + o0] - P[k])
                    w1 = _word(key, c)
                    w2 = _word(key, c + U64(1))
                    c += U64(2)
                    xn = _signed_pow(w2, inv_a1)
                    x = xn if _unit(w1) <= ax else x
                    ax = abs(x)
                    g = _g_of(x, q)
                out[r, 0] = a0
            elif G == 3:
                o0 = offs[0]
                o1 = offs[1]
                o2 = offs[2]
                a0 = out[r, 0]
                a1 = out[r, 1]
                a2 = out[r, 2]
                for k in range(k0, k1):
                    base = P[k]
                    a0 += g * (P[k + o0] - base)
                    a1 += g * (P[k + o1] - base)
                    a2 += g * (P[k + o2] - base)
                    w1 = _word(key, c)
                    w2 = _word(key, c + U64(1))
                    c += U64(2)
                    xn = _signed_pow(w2, inv_a1)
                    x = xn if _unit(w1) <= ax else x
                    ax = abs(x)
                    g = _g_of(x, q)
                out[r, 0] = a0
                out[r, 1] = a1
                out[r, 2] = a2
            else:
                for k in range(k0, k1):
                    base = P[k]
                    for gg in range(G):
                        out[r, gg] += g * (P[k + offs[gg]] - base)
                    w1 = _word(key, c)
                    w2 = _word(key, c + U64(1))
                    c += U64(2)
                    xn = _signed_pow(w2, inv_a1)
                    x = xn if _unit(w1) <= ax else x
                    ax = abs(x)
                    g = _g_of(x, q)
            st_c[r] = c
            st_x[r] = x
        k0 = k1


# ---------------------------------------------------------------------------
# Gaussian AR(1) chain with Hermite-polynomial functional


@njit(inline="always")
def _bm_normal(key, c):
    w1 = _word(key, c)
    w2 = _word(key, c + U64(1))
    u1 = _unit(w1)
    u2 = _unit(w2)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@njit(inline="always")
def _hermite_sum(coeffs, x):
    # coeffs[l-1] multiplies H_l; probabilists' recurrence H_{l+1} = x H_l - l H_{l-1}
    h_prev = 1.0
    h = x
    total = coeffs[0] * x
    for l in range(1, coeffs.shape[0]):
        h_next = x * h - l * h_prev
        h_prev = h
        h = h_next
        total += coeffs[l] * h
    return total


@njit(cache=True)
def gaussian_path(key, count, r_corr, coeffs):
    gamma = np.empty(count)
    xi = np.empty(count)
    c = U64(0)
    x = _bm_normal(key, c)
    c += U64(2)
    s = np.sqrt(1.0 - r_corr * r_corr)
    for k in range(count):
        gamma[k] = x
        xi[k] = _hermite_sum(coeffs, x)
        z = _bm_normal(key, c)
        c += U64(2)
        x = r_corr * x + s * z
    return gamma, xi


@njit(cache=True)
def gaussian_paths_batch(keys, count, r_corr, coeffs):
    out = np.empty((keys.shape[0], count))
    for r in range(keys.shape[0]):
        _, xi = gaussian_path(keys[r], count, r_corr, coeffs)
        out[r] = xi
    return out


@njit(cache=True)
def gaussian_sums(keys, r_corr, coeffs, P, offs, W, out):
    R = keys.shape[0]
    G = offs.shape[0]
    s = np.sqrt(1.0 - r_corr * r_corr)
    st_x = np.empty(R)
    st_c = np.empty(R, dtype=np.uint64)
    for r in range(R):
        st_x[r] = _bm_normal(keys[r], U64(0))
        st_c[r] = U64(2)
    out[:, :] = 0.0
    k0 = 0
    while k0 < W:
        k1 = min(k0 + CHUNK, W)
        for r in range(R):
            key = keys[r]
            c = st_c[r]
            x = st_x[r]
            for k in range(k0, k1):
                g = _hermite_sum(coeffs, x)
                base = P[k]
                for gg in range(G):
                    out[r, gg] += g * (P[k + offs[gg]] - base)
                z = _bm_normal(key, c)
                c += U64(2)
                x = r_corr * x + s * z
            st_c[r] = c
            st_x[r] = x
        k0 = k1


# ---------------------------------------------------------------------------
# Random walk on the cyclic group Z_m


@njit(inline="always")
def _cdf_step(cdf, u):
    lo = 0
    hi = cdf.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if u <= cdf[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def group_path(key, count, cdf, table):
    m = cdf.shape[0]
    idx = np.empty(count, dtype=np.int64)
    xi = np.empty(count)
    c = U64(0)
    w = _word(key, c)
    c += U64(1)
    pos = int(_unit(w) * m)
    if pos >= m:
        pos = m - 1
    for k in range(count):
        idx[k] = pos
        xi[k] = table[pos]
        w = _word(key, c)
        c += U64(1)
        pos = (pos + _cdf_step(cdf, _unit(w))) % m
    return idx, xi


@njit(cache=True)
def group_paths_batch(keys, count, cdf, table):
    out = np.empty((keys.shape[0], count))
    for r in range(keys.shape[0]):
        _, xi = group_path(keys[r], count, cdf, table)
        out[r] = xi
    return out


@njit(cache=True)
def group_sums(keys, cdf, table, P, offs, W, out):
    R = keys.shape[0]
    G = offs.shape[0]
    m = cdf.shape[0]
    st_pos = np.empty(R, dtype=np.int64)
    st_c = np.empty(R, dtype=np.uint64)
    for r in range(R):
        w = _word(keys[r], U64(0))
        pos = int(_unit(w) * m)
        if pos >= m:
            pos = m - 1
        st_pos[r] = pos
        st_c[r] = U64(1)
    out[:, :] = 0.0
    k0 = 0
    while k0 < W:
        k1 = min(k0 + CHUNK, W)
        for r in range(R):
            key = keys[r]
            c = st_c[r]
            pos = st_pos[r]
            for k in range(k0, k1):
                g = table[pos]
                base = P[k]
                for gg in range(G):
                    out[r, gg] += g * (P[k + offs[gg]] - base)
                w = _word(key, c)
                c += U64(1)
                pos = (pos + _cdf_step(cdf, _unit(w))) % m
            st_c[r] = c
            st_pos[r] = pos
        k0 = k1


@njit(cache=True)
def kahan_dot(weights, values):
    """Compensated dot product in fixed ascending order."""
    total = 0.0
    comp = 0.0
    for k in range(weights.shape[0]):
        term = weights[k] * values[k] - comp
        tmp = total + term
        comp = (tmp - total) - term
        total = tmp
    return total
