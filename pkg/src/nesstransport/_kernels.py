"""Fock-space inner loops, with a numba path and a pure-numpy path.

Set ``NESSTRANSPORT_NUMBA=0`` in the environment to force the numpy path.
Occupation basis: mode ``i`` is bit ``i`` of the state index; Jordan-Wigner
signs count occupied modes of lower index.
"""
import os
from itertools import combinations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("NESSTRANSPORT_NUMBA", "1").lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def _popcount_table(dim):
    states = np.arange(dim, dtype=np.int64)
    pc = np.zeros(dim, dtype=np.int64)
    for b in range(max(int(dim).bit_length() - 1, 0)):
        pc += (states >> b) & 1
    return pc


def subsets_by_size(n):
    """State indices grouped by particle number: ``out[k]`` is an int array."""
    return [
        np.array([sum(1 << i for i in c) for c in combinations(range(n), k)], dtype=np.int64)
        for k in range(n + 1)
    ]


# --------------------------------------------------------------------------
# dGamma(A) = sum_ij A_ij c_i^dag c_j as a dense 2^n x 2^n matrix


def dgamma_numpy(A):
    A = np.ascontiguousarray(A, dtype=np.complex128)
    n = A.shape[0]
    dim = 1 << n
    pc = _popcount_table(dim)
    states = np.arange(dim, dtype=np.int64)
    out = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(n):
        has_j = ((states >> j) & 1).astype(bool)
        s_in = states[has_j]
        s1 = s_in ^ (1 << j)
        sign1 = 1 - 2 * (pc[s_in & ((1 << j) - 1)] & 1)
        for i in range(n):
            a = A[i, j]
            if a == 0:
                continue
            free_i = ((s1 >> i) & 1) == 0
            s2 = s1[free_i] | (1 << i)
            sign2 = 1 - 2 * (pc[s1[free_i] & ((1 << i) - 1)] & 1)
            out[s2, s_in[free_i]] += a * sign1[free_i] * sign2
    return out


def _dgamma_loop(A):
    n = A.shape[0]
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=np.complex128)
    for s in range(dim):
        for j in range(n):
            if not (s >> j) & 1:
                continue
            s1 = s ^ (1 << j)
            low = s & ((1 << j) - 1)
            par1 = 0
            while low:
                par1 ^= 1
                low &= low - 1
            for i in range(n):
                a = A[i, j]
                if a == 0:
                    continue
                if (s1 >> i) & 1:
                    continue
                s2 = s1 | (1 << i)
                low = s1 & ((1 << i) - 1)
                par2 = 0
                while low:
                    par2 ^= 1
                    low &= low - 1
                if par1 ^ par2:
                    out[s2, s] -= a
                else:
                    out[s2, s] += a
    return out


# --------------------------------------------------------------------------
# Gamma(S): on the k-particle sector, <I|Gamma(S)|J> = det S[I, J]


def _bits(state, n):
    return [i for i in range(n) if (state >> i) & 1]


def gamma_numpy(S):
    S = np.ascontiguousarray(S, dtype=np.complex128)
    n = S.shape[0]
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[0, 0] = 1.0
    for k, sub in enumerate(subsets_by_size(n)):
        if k == 0:
            continue
        idx = np.array([_bits(int(s), n) for s in sub], dtype=np.int64)  # (m, k)
        blocks = S[idx[:, None, :, None], idx[None, :, None, :]]  # (m, m, k, k)
        out[np.ix_(sub, sub)] = np.linalg.det(blocks)
    return out


def _det_small(a, k):
    """Determinant of the leading k x k block of ``a`` by partial-pivot LU (destroys ``a``)."""
    det = 1.0 + 0.0j
    for c in range(k):
        p = c
        best = abs(a[c, c])
        for r in range(c + 1, k):
            if abs(a[r, c]) > best:
                best = abs(a[r, c])
                p = r
        if best == 0.0:
            return 0.0 + 0.0j
        if p != c:
            for j in range(k):
                tmp = a[c, j]
                a[c, j] = a[p, j]
                a[p, j] = tmp
            det = -det
        piv = a[c, c]
        det *= piv
        for r in range(c + 1, k):
            m = a[r, c] / piv
            if m != 0:
                for j in range(c + 1, k):
                    a[r, j] -= m * a[c, j]
    return det


def _gamma_loop(S, states, members, offsets):
    n = S.shape[0]
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[0, 0] = 1.0
    for k in range(1, n + 1):
        lo = offsets[k]
        hi = offsets[k + 1]
        sub = np.empty((k, k), dtype=np.complex128)
        for a in range(lo, hi):
            for b in range(lo, hi):
                for r in range(k):
                    for c in range(k):
                        sub[r, c] = S[members[a, r], members[b, c]]
                out[states[a], states[b]] = _det_small(sub, k)
    return out


def _gamma_tables(n):
    groups = subsets_by_size(n)
    states = np.concatenate(groups)
    members = np.zeros((states.size, max(n, 1)), dtype=np.int64)
    for a, s in enumerate(states):
        bits = _bits(int(s), n)
        members[a, : len(bits)] = bits
    offsets = np.zeros(n + 2, dtype=np.int64)
    offsets[1:] = np.cumsum([g.size for g in groups])
    return states, members, offsets


if HAVE_NUMBA:
    _det_small = numba.njit(cache=True)(_det_small)
    _dgamma_jit = numba.njit(cache=True)(_dgamma_loop)
    _gamma_jit = numba.njit(cache=True)(_gamma_loop)

    def dgamma_numba(A):
        return _dgamma_jit(np.ascontiguousarray(A, dtype=np.complex128))

    def gamma_numba(S):
        S = np.ascontiguousarray(S, dtype=np.complex128)
        states, members, offsets = _gamma_tables(S.shape[0])
        return _gamma_jit(S, states, members, offsets)

else:  # pragma: no cover
    dgamma_numba = dgamma_numpy
    gamma_numba = gamma_numpy


def dgamma(A):
    """Differential second quantization of a one-particle matrix."""
    return dgamma_numba(A) if USE_NUMBA else dgamma_numpy(A)


def gamma(S):
    """Second quantization of a one-particle matrix (any square matrix)."""
    return gamma_numba(S) if USE_NUMBA else gamma_numpy(S)


def occupation_sums(values):
    """For each basis state, the sum of ``values[i]`` over occupied modes ``i``.

    ``values`` has shape (n,) or (n, m); the result has shape (2^n,) or (2^n, m).
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    states = np.arange(1 << n, dtype=np.int64)
    occ = ((states[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    return occ @ values
