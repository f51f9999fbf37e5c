"""Connected amplitudes and the extended Wick rule for amplitudes.

Excitations are taken relative to a reference configuration ``G``: a pair
``(P, Q)`` with ``P`` inside ``G`` and ``Q`` outside it labels the basis state
``G + Q - P``.  The Wick rules are stated for a reference occupying the lowest
modes.  For a general ``G`` everything is computed in the relabelled frame
where ``G`` precedes its complement (a mode permutation that preserves the
order inside ``G`` and inside the complement), so the ratio used here is::

    r(P, Q) = sigma(G - P, Q) * v(G + Q - P) / v(G)

which is the plain amplitude ratio whenever every mode of ``Q`` lies above
every mode of ``G - P`` (in particular for ``G = (1..n)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import factorial
from typing import Iterator, Mapping, NamedTuple

from .errors import InvalidInputError, ReferenceAmplitudeError
from .fock import ModeSet, StateVector, mask_of, modes_of, popcount, sign_concat

REF_TOL = 1e-12


class ExcitationKey(NamedTuple):
    P: int
    Q: int


@dataclass(frozen=True, eq=False)
class ConnectedAmplitudes:
    G: int
    k: int
    l: int
    n: int
    table: dict = field(repr=False)

    def __getitem__(self, key) -> complex:
        return self.table[ExcitationKey(*key)]


def _subsets(mask: int, size: int) -> Iterator[int]:
    for combo in combinations(modes_of(mask), size):
        yield mask_of(combo)


def excitations(G: int, l: int, order: int) -> Iterator[ExcitationKey]:
    """All ``(P, Q)`` with ``|P| = |Q| = order`` relative to ``G``."""
    comp = ((1 << l) - 1) & ~G
    for p in _subsets(G, order):
        for q in _subsets(comp, order):
            yield ExcitationKey(p, q)


def _check_reference(v: StateVector, G: ModeSet, ref_tol: float) -> tuple[int, complex]:
    g = mask_of(G)
    if popcount(g) != v.n or g >> v.l:
        raise InvalidInputError(f"reference must be an {v.n}-subset of 1..{v.l}")
    vg = v.amplitude(g)
    if abs(vg) <= ref_tol:
        raise ReferenceAmplitudeError(
            f"v(G) = {vg!r} vanishes for G = {modes_of(g)}; rotate the state or pick another reference"
        )
    return g, vg


def ratio(v: StateVector, G: ModeSet, P: ModeSet, Q: ModeSet) -> complex:
    """Frame-adjusted amplitude ratio ``r(P, Q)``."""
    g, vg = _check_reference(v, G, 0.0)
    p, q = mask_of(P), mask_of(Q)
    return sign_concat(g & ~p, q) * v.amplitude((g & ~p) | q) / vg


def ratio_table(
    v: StateVector, G: ModeSet, max_order: int, ref_tol: float = REF_TOL
) -> dict[ExcitationKey, complex]:
    g, vg = _check_reference(v, G, ref_tol)
    rank = v.basis.rank
    table = {ExcitationKey(0, 0): 1.0 + 0j}
    for order in range(1, max_order + 1):
        for key in excitations(g, v.l, order):
            rest = g & ~key.P
            table[key] = sign_concat(rest, key.Q) * complex(v.amps[rank(rest | key.Q)]) / vg
    return table


def _wick_sum(lookup, p: int, q: int) -> complex:
    """Right-hand side of the recursive rule, built from the callable ``lookup``."""
    size = popcount(p)
    total = 0j
    for j in range(1, size):
        sign_j = -1 if (size - j + 1) % 2 else 1  # (-1)^{|P - P'| + 1}
        weight = j / size
        for p1 in _subsets(p, j):
            p2 = p & ~p1
            sp = sign_concat(p2, p1)
            for q1 in _subsets(q, j):
                q2 = q & ~q1
                a = lookup(p1, q1)
                if a == 0:
                    continue
                b = lookup(p2, q2)
                if b == 0:
                    continue
                total += sign_j * weight * sp * sign_concat(q1, q2) * a * b
    return total


def connected_amplitudes(
    v: StateVector,
    G: ModeSet,
    k: int,
    max_order: int | None = None,
    ref_tol: float = REF_TOL,
) -> ConnectedAmplitudes:
    """Connected amplitudes ``v^c_{P,Q}`` for ``|P| <= max_order`` (default ``k``).

    ``v^c`` is the ratio minus its recursive Wick prediction; for ``|P| = 1``
    it is the ratio itself.  For states in G_k entries above order ``k``
    vanish, which is why the default table stops at ``k``.
    """
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    top = k if max_order is None else max_order
    top = min(top, v.n, v.l - v.n)
    ratios = ratio_table(v, G, top, ref_tol)
    lookup = lambda p, q: ratios[ExcitationKey(p, q)]  # noqa: E731
    table = {}
    for key, r in ratios.items():
        if key.P == 0:
            continue
        table[key] = r - _wick_sum(lookup, key.P, key.Q)
    return ConnectedAmplitudes(mask_of(G), k, v.l, v.n, table)


def wick_reconstruct_recursive(
    low: Mapping, P: ModeSet, Q: ModeSet, k: int | None = None
) -> complex:
    """Predict ``r(P, Q)`` from ratios of order ``<= k`` by iterating the rule.

    ``low`` maps ``(P, Q)`` masks to ratios ``r``; ``k`` defaults to the
    highest order present.
    """
    p, q = mask_of(P), mask_of(Q)
    if popcount(p) != popcount(q):
        raise InvalidInputError("|P| must equal |Q|")
    if k is None:
        k = max((popcount(key[0]) for key in low), default=0)
    if popcount(p) <= k:
        raise InvalidInputError(f"|P| = {popcount(p)} must exceed k = {k}")
    memo: dict[tuple[int, int], complex] = {}

    def lookup(p1: int, q1: int) -> complex:
        if p1 == 0:
            return 1.0 + 0j
        if popcount(p1) <= k:
            try:
                return complex(low[(p1, q1)])
            except KeyError:
                raise InvalidInputError(
                    f"missing lower-order amplitude for P={modes_of(p1)}, Q={modes_of(q1)}"
                ) from None
        key = (p1, q1)
        if key not in memo:
            memo[key] = _wick_sum(lookup, p1, q1)
        return memo[key]

    return lookup(p, q)


# ---------------------------------------------------------------------------
# nu(m) and partitions


def _trim(m) -> tuple[int, ...]:
    m = tuple(int(x) for x in m)
    if any(x < 0 for x in m):
        raise InvalidInputError(f"partition vector must be non-negative, got {m}")
    while m and m[-1] == 0:
        m = m[:-1]
    return m


def weight(m) -> int:
    """``k . m = sum_i i m_i``."""
    return sum((i + 1) * x for i, x in enumerate(m))


@lru_cache(maxsize=None)
def _nu(m: tuple[int, ...]) -> Fraction:
    if sum(m) <= 1:
        return Fraction(1)
    total = Fraction(0)
    wm = weight(m)
    for mp in product(*(range(x + 1) for x in m)):
        if mp == m:
            continue
        wp = weight(mp)
        if wp == 0:
            continue
        diff = tuple(a - b for a, b in zip(m, mp))
        binom = 1
        for a, b in zip(m, mp):
            binom *= factorial(a) // (factorial(b) * factorial(a - b))
        sign = -1 if (wm - wp + 1) % 2 else 1
        total += sign * Fraction(wp, wm) * _nu(_trim(mp)) * _nu(_trim(diff)) * binom
    return total


def nu(m) -> Fraction:
    """Universal coefficient ``nu(m)`` (exact rational)."""
    return _nu(_trim(m))


def partition_vectors(max_weight: int, k: int) -> list[tuple[int, ...]]:
    """All ``m = (m_1..m_k)`` with ``k . m <= max_weight``."""
    out = []

    def rec(i: int, left: int, acc: list[int]):
        if i > k:
            out.append(tuple(acc))
            return
        for c in range(left // i + 1):
            rec(i + 1, left - c * i, acc + [c])

    rec(1, max_weight, [])
    return out


def partitions(P: ModeSet, Q: ModeSet, k: int | None = None) -> Iterator[list[ExcitationKey]]:
    """Partitions of ``(P, Q)`` into blocks with ``|P_a| = |Q_a| <= k``.

    Blocks come sorted by their smallest ``P`` mode.
    """
    p, q = mask_of(P), mask_of(Q)
    if popcount(p) != popcount(q):
        raise InvalidInputError("|P| must equal |Q|")
    cap = popcount(p) if k is None else k

    def rec(p_left: int, q_left: int):
        if p_left == 0:
            yield []
            return
        low = p_left & -p_left
        others = p_left & ~low
        for size in range(1, min(cap, popcount(p_left)) + 1):
            for extra in _subsets(others, size - 1):
                pa = low | extra
                for qa in _subsets(q_left, size):
                    for tail in rec(p_left & ~pa, q_left & ~qa):
                        yield [ExcitationKey(pa, qa)] + tail

    yield from rec(p, q)


def partition_sign(blocks: list[ExcitationKey]) -> int:
    """``sigma(P_r, .., P_1) * sigma(Q_1, .., Q_r)``."""
    return sign_concat(*[b.P for b in reversed(blocks)]) * sign_concat(*[b.Q for b in blocks])


def partition_vector(blocks: list[ExcitationKey]) -> tuple[int, ...]:
    sizes = [popcount(b.P) for b in blocks]
    m = [0] * max(sizes, default=0)
    for s in sizes:
        m[s - 1] += 1
    return tuple(m)


def cumulant_reconstruct(ca: ConnectedAmplitudes, P: ModeSet, Q: ModeSet) -> complex:
    """``r(P, Q)`` as a sum over partitions weighted by ``nu`` and connected amplitudes."""
    p, q = mask_of(P), mask_of(Q)
    if p == 0 and q == 0:
        return 1.0 + 0j
    total = 0j
    for blocks in partitions(p, q, ca.k):
        prod = 1.0 + 0j
        for b in blocks:
            prod *= ca.table.get(b, 0j)
            if prod == 0:
                break
        if prod == 0:
            continue
        total += float(nu(partition_vector(blocks))) * partition_sign(blocks) * prod
    return total
