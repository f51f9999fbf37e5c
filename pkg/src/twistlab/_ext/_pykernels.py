"""Numpy fallback for the compiled kernels.

Masks are int64 with bit ``m - 1`` standing for mode ``m``.
"""
from functools import lru_cache
from itertools import combinations

import numpy as np

MAX_LUT_MODES = 22


@lru_cache(maxsize=None)
def _binom_table(l: int) -> np.ndarray:
    table = np.zeros((l + 1, l + 2), dtype=np.int64)
    for a in range(l + 1):
        table[a, 0] = 1
        for b in range(1, a + 1):
            table[a, b] = table[a - 1, b - 1] + table[a - 1, b]
    return table


@lru_cache(maxsize=None)
def colex_rank_lut(l: int) -> np.ndarray:
    if l > MAX_LUT_MODES:
        raise ValueError(f"rank lookup table limited to l <= {MAX_LUT_MODES}, got {l}")
    binom = _binom_table(l)
    masks = np.arange(1 << l, dtype=np.int64)
    rank = np.zeros(1 << l, dtype=np.int64)
    count = np.zeros(1 << l, dtype=np.int64)
    for b in range(l):
        bit = (masks >> b) & 1
        rank += bit * binom[b, count + 1]
        count += bit
    rank.setflags(write=False)
    return rank


def _positions(states: np.ndarray, m: int) -> np.ndarray:
    """0-based positions of set bits, ascending, shape (len(states), m)."""
    out = np.empty((len(states), m), dtype=np.int64)
    work = states.copy()
    for j in range(m):
        low = work & -work
        out[:, j] = np.log2(low).astype(np.int64) if len(work) else 0
        work ^= low
    return out


def removal_table(states, rank_lut, k):
    states = np.asarray(states, dtype=np.int64)
    rank_lut = np.asarray(rank_lut)
    if len(states) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy(), empty.copy()
    m = int(np.bitwise_count(states[0]))
    if k < 0 or k > m:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy(), empty.copy()
    pos = _positions(states, m)
    idx = np.arange(len(states), dtype=np.int64)
    src, sub, dst, sign = [], [], [], []
    for combo in combinations(range(m), k):
        rmask = np.zeros(len(states), dtype=np.int64)
        for c in combo:
            rmask |= np.int64(1) << pos[:, c]
        # elements of T\R above each removed one; independent of T
        inversions = sum((m - 1 - c) - (k - 1 - j) for j, c in enumerate(combo))
        src.append(idx)
        sub.append(rank_lut[rmask])
        dst.append(rank_lut[states & ~rmask])
        sign.append(np.full(len(states), -1 if inversions % 2 else 1, dtype=np.int64))
    src = np.concatenate(src)
    sub = np.concatenate(sub)
    dst = np.concatenate(dst)
    sign = np.concatenate(sign)
    order = np.lexsort((sub, src))
    return src[order], sub[order], dst[order], sign[order]


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _sigma(a: int, r: int) -> int:
    """sigma(A, R) for disjoint masks: parity of pairs a > r."""
    count = 0
    for b in _bits(r):
        count += (a >> (b + 1)).bit_count()
    return -1 if count & 1 else 1


def residual_sum(amps, rank_lut, a_states, b_states, k):
    amps = np.asarray(amps, dtype=np.complex128)
    lut = np.asarray(rank_lut)
    support = {}
    total = 0.0
    amp_list = amps.tolist()
    lut_get = lut.__getitem__
    for a in np.asarray(a_states).tolist():
        for b in np.asarray(b_states).tolist():
            d = b & ~a
            if d.bit_count() < k:
                continue
            bits = support.get(d)
            if bits is None:
                bits = support[d] = _bits(d)
            c = 0j
            for combo in combinations(bits, k):
                r = 0
                for x in combo:
                    r |= 1 << x
                rest = b & ~r
                va = amp_list[lut_get(a | r)]
                vb = amp_list[lut_get(rest)]
                if va == 0 or vb == 0:
                    continue
                c += _sigma(a, r) * _sigma(rest, r) * va * vb
            total += c.real * c.real + c.imag * c.imag
    return total
