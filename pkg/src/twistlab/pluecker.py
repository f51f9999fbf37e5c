"""Generalized Pluecker components, class membership and CI diagnostics."""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from .corrmeas import twisted_purity
from .errors import InvalidInputError
from .fock import ModeSet, StateVector, basis, mask_of, modes_of, popcount, sign_concat

DEFAULT_AMP_TOL = 1e-12


def residual_component(v: StateVector, A: ModeSet, B: ModeSet, k: int) -> complex:
    """Component ``<A|<B| Omega^k |v>|v> / k!``.

    Equal to ``sum_{R in B\\A, |R|=k} v(A+R) v(B-R) sigma(A, R) sigma(B-R, R)``.
    """
    a, b = mask_of(A), mask_of(B)
    if popcount(a) != v.n - k or popcount(b) != v.n + k:
        raise InvalidInputError(f"need |A| = n-k = {v.n - k} and |B| = n+k = {v.n + k}")
    if (a | b) >> v.l:
        raise InvalidInputError(f"modes outside 1..{v.l}")
    free = modes_of(b & ~a)
    if len(free) < k:
        return 0j
    rank = v.basis.rank
    total = 0j
    for combo in combinations(free, k):
        r = mask_of(combo)
        rest = b & ~r
        total += (
            v.amps[rank(a | r)] * v.amps[rank(rest)] * sign_concat(a, r) * sign_concat(rest, r)
        )
    return complex(total)


def residual_components(v: StateVector, k: int) -> dict[tuple[int, int], complex]:
    """All nonzero components keyed by ``(A, B)`` masks (small systems only)."""
    out = {}
    for a in basis(v.l, v.n - k).states.tolist():
        for b in basis(v.l, v.n + k).states.tolist():
            c = residual_component(v, a, b, k)
            if c != 0:
                out[(a, b)] = c
    return out


def is_in_gk(v: StateVector, k: int, tol: float = 1e-10) -> tuple[bool, float]:
    """``(omega_k < tol, omega_k)``."""
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    omega = twisted_purity(v, k)
    return omega < tol, omega


def _support(v: StateVector, amp_tol: float) -> np.ndarray:
    if amp_tol < 0:
        raise InvalidInputError("amp_tol must be non-negative")
    support = v.support(amp_tol)
    if len(support) == 0:
        raise InvalidInputError("state has empty support at this amplitude tolerance")
    return support


def support_diameter(v: StateVector, amp_tol: float = DEFAULT_AMP_TOL) -> int:
    """Largest ``|S1 ^ S2| / 2`` over pairs in the support."""
    s = _support(v, amp_tol)
    worst = 0
    for i in range(len(s)):
        worst = max(worst, int(np.bitwise_count(s[i] ^ s[i:]).max()))
    return worst // 2


def support_radius(v: StateVector, S0: ModeSet, amp_tol: float = DEFAULT_AMP_TOL) -> int:
    """Largest ``|S ^ S0|`` over the support."""
    s0 = mask_of(S0)
    if popcount(s0) != v.n:
        raise InvalidInputError(f"reference must have {v.n} modes")
    s = _support(v, amp_tol)
    return int(np.bitwise_count(s ^ s0).max())


def ci_dimension(l: int, n: int, k: int) -> int:
    """Dimension of the span of states with ``|S ^ S0| < k``."""
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    return sum(comb(n, r) * comb(l - n, r) for r in range(k // 2 + 1))


def random_ci_state(
    l: int,
    n: int,
    radius: int,
    rng: np.random.Generator,
    S0: ModeSet | None = None,
    complex_amps: bool = True,
    exact_excitations: tuple[int, ...] | None = None,
) -> StateVector:
    """Normalized random state supported on ``|S ^ S0| <= radius``.

    ``exact_excitations`` restricts the support to the listed excitation
    levels (``|S ^ S0| / 2``); the reference itself always carries weight.
    """
    s0 = mask_of(S0) if S0 is not None else (1 << n) - 1
    b = basis(l, n)
    dist = np.bitwise_count(b.states ^ s0)
    keep = dist <= radius
    if exact_excitations is not None:
        levels = set(exact_excitations) | {0}
        keep &= np.isin(dist // 2, list(levels))
    amps = np.zeros(b.dim, dtype=np.complex128)
    count = int(keep.sum())
    amps[keep] = rng.standard_normal(count)
    if complex_amps:
        amps[keep] += 1j * rng.standard_normal(count)
    amps[b.rank(s0)] += 2.0
    return StateVector(b, amps).normalized()
