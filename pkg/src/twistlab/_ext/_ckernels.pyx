# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``twistlab._ext`` for the contracts."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


cdef inline int popcount(uint64_t x) noexcept nogil:
    return __builtin_popcountll(x)


cdef inline int sigma_sign(uint64_t a, uint64_t r) noexcept nogil:
    # sigma(A, R) for disjoint A, R: parity of pairs (a, r) with a > r
    cdef int count = 0
    cdef int b
    while r:
        b = __builtin_ctzll(r)
        count += popcount(a >> (b + 1))
        r &= r - 1
    return -1 if (count & 1) else 1


def colex_rank_lut(int l):
    from ._pykernels import colex_rank_lut as _lut
    return _lut(l)


def removal_table(states, rank_lut, int k):
    cdef const int64_t[::1] st = np.ascontiguousarray(states, dtype=np.int64)
    cdef const int64_t[::1] lut = np.ascontiguousarray(rank_lut, dtype=np.int64)
    cdef Py_ssize_t dim = st.shape[0]
    cdef int m, j, c, inv
    cdef Py_ssize_t i, out, ncomb
    cdef uint64_t t, combo, rmask, low, hi
    cdef int pos[64]

    if dim == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy(), empty.copy()
    m = popcount(<uint64_t>st[0])
    if k < 0 or k > m:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy(), empty.copy()

    ncomb = 1
    for j in range(k):
        ncomb = ncomb * (m - j) // (j + 1)

    src_a = np.empty(dim * ncomb, dtype=np.int64)
    sub_a = np.empty(dim * ncomb, dtype=np.int64)
    dst_a = np.empty(dim * ncomb, dtype=np.int64)
    sgn_a = np.empty(dim * ncomb, dtype=np.int64)
    cdef int64_t[::1] src = src_a
    cdef int64_t[::1] sub = sub_a
    cdef int64_t[::1] dst = dst_a
    cdef int64_t[::1] sgn = sgn_a

    out = 0
    with nogil:
        for i in range(dim):
            t = <uint64_t>st[i]
            j = 0
            while t:
                pos[j] = __builtin_ctzll(t)
                t &= t - 1
                j += 1
            t = <uint64_t>st[i]
            # Gosper enumeration of k-subsets of the m occupied positions,
            # increasing in position mask and hence in the removed mode mask
            combo = (<uint64_t>1 << k) - 1
            while True:
                rmask = 0
                inv = 0
                j = 0
                hi = combo
                while hi:
                    c = __builtin_ctzll(hi)
                    rmask |= (<uint64_t>1) << pos[c]
                    inv += (m - 1 - c) - (k - 1 - j)
                    j += 1
                    hi &= hi - 1
                src[out] = i
                sub[out] = lut[rmask]
                dst[out] = lut[t & ~rmask]
                sgn[out] = -1 if (inv & 1) else 1
                out += 1
                if k == 0:
                    break
                low = combo & (~combo + 1)
                hi = combo + low
                combo = (((combo ^ hi) >> 2) // low) | hi
                if combo >> m:
                    break
    return src_a, sub_a, dst_a, sgn_a


def residual_sum(amps, rank_lut, a_states, b_states, int k):
    cdef const double complex[::1] v = np.ascontiguousarray(amps, dtype=np.complex128)
    cdef const int64_t[::1] lut = np.ascontiguousarray(rank_lut, dtype=np.int64)
    cdef const int64_t[::1] aa = np.ascontiguousarray(a_states, dtype=np.int64)
    cdef const int64_t[::1] bb = np.ascontiguousarray(b_states, dtype=np.int64)
    cdef Py_ssize_t ia, ib
    cdef uint64_t a, b, d, combo, low, hi, r, rest
    cdef int nd, j, c
    cdef int pos[64]
    cdef double complex acc, va, vb
    cdef double total = 0.0

    with nogil:
        for ia in range(aa.shape[0]):
            a = <uint64_t>aa[ia]
            for ib in range(bb.shape[0]):
                b = <uint64_t>bb[ib]
                d = b & ~a
                nd = popcount(d)
                if nd < k:
                    continue
                j = 0
                hi = d
                while hi:
                    pos[j] = __builtin_ctzll(hi)
                    hi &= hi - 1
                    j += 1
                acc = 0
                combo = (<uint64_t>1 << k) - 1
                while True:
                    r = 0
                    hi = combo
                    while hi:
                        c = __builtin_ctzll(hi)
                        r |= (<uint64_t>1) << pos[c]
                        hi &= hi - 1
                    rest = b & ~r
                    va = v[lut[a | r]]
                    vb = v[lut[rest]]
                    if va != 0 and vb != 0:
                        acc = acc + sigma_sign(a, r) * sigma_sign(rest, r) * va * vb
                    if k == 0:
                        break
                    low = combo & (~combo + 1)
                    hi = combo + low
                    combo = (((combo ^ hi) >> 2) // low) | hi
                    if combo >> nd:
                        break
                total += acc.real * acc.real + acc.imag * acc.imag
    return total
