"""Fixed-particle-number fermionic Fock space.

Conventions
-----------
Modes are numbered ``1..l``.  A set of modes (a *ModeSet*) is stored as an
integer bitmask with bit ``m - 1`` standing for mode ``m``; every public
function also accepts an iterable of 1-based modes in its place.

The basis state for an ascending mode sequence ``S = (s_1 < .. < s_n)`` is::

    |S> = psi^dag_{s_n} ... psi^dag_{s_1} |vac>

and basis states of ``n`` particles are enumerated in colexicographic order,
which coincides with increasing bitmask value.  The colex rank of
``{c_1 < .. < c_n}`` (0-based ``c_i``) is ``sum_i binom(c_i, i)``.

``sigma(A, B)`` is the sign of the permutation sorting the concatenation of
sorted ``A`` and sorted ``B``; for sets it is the parity of the number of
pairs ``a > b``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Iterable, Mapping, Union

import numpy as np
import scipy.linalg

from . import _ext
from .errors import InvalidInputError

ModeSet = Union[int, Iterable[int]]

MAX_MODES = _ext._pykernels.MAX_LUT_MODES


# ---------------------------------------------------------------------------
# mode sets and signs


def mask_of(modes: ModeSet) -> int:
    """Bitmask for a set of 1-based modes; integers are taken as masks already."""
    if isinstance(modes, (int, np.integer)):
        mask = int(modes)
        if mask < 0:
            raise InvalidInputError(f"negative mode mask {mask}")
        return mask
    mask = 0
    for m in modes:
        m = int(m)
        if m < 1:
            raise InvalidInputError(f"modes are 1-based, got {m}")
        bit = 1 << (m - 1)
        if mask & bit:
            raise InvalidInputError(f"repeated mode {m}")
        mask |= bit
    return mask


def modes_of(mask: int) -> tuple[int, ...]:
    """Ascending 1-based modes of a bitmask."""
    out = []
    mask = int(mask)
    while mask:
        low = mask & -mask
        out.append(low.bit_length())
        mask ^= low
    return tuple(out)


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def sign_sort(seq: Iterable[int]) -> int:
    """Sign of the permutation that sorts ``seq`` (no repeats allowed)."""
    seq = [int(x) for x in seq]
    if len(set(seq)) != len(seq):
        raise InvalidInputError(f"sequence has repeated elements: {seq}")
    inversions = sum(1 for i, j in combinations(range(len(seq)), 2) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def sign_concat(*sets: ModeSet) -> int:
    """sigma(A, B, ...) for pairwise disjoint mode sets, each taken sorted."""
    masks = [mask_of(s) for s in sets]
    seen = 0
    count = 0
    for mask in masks:
        if seen & mask:
            raise InvalidInputError("sign_concat needs disjoint sets")
        # elements of earlier sets that exceed each element of this one
        for b in modes_of(mask):
            count += popcount(seen >> b)
        seen |= mask
    return -1 if count % 2 else 1


def _sigma_vec(a: np.ndarray, b: int) -> np.ndarray:
    """sigma(A_i, B) for an array of masks A_i disjoint from the fixed mask B."""
    count = np.zeros(len(a), dtype=np.int64)
    for mode in modes_of(b):
        count += np.bitwise_count(a >> mode)
    return 1 - 2 * (count & 1)


# ---------------------------------------------------------------------------
# basis


@lru_cache(maxsize=None)
def _popcounts(l: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << l, dtype=np.int64))


@dataclass(frozen=True)
class FockBasis:
    """Colex-ordered basis of ``n``-particle states on ``l`` modes."""

    l: int
    n: int

    def __post_init__(self):
        if not (0 <= self.l <= MAX_MODES):
            raise InvalidInputError(f"l must lie in 0..{MAX_MODES}, got {self.l}")
        if not (0 <= self.n <= self.l):
            raise InvalidInputError(f"n must lie in 0..l, got n={self.n}, l={self.l}")

    @cached_property
    def states(self) -> np.ndarray:
        states = np.flatnonzero(_popcounts(self.l) == self.n).astype(np.int64)
        states.setflags(write=False)
        return states

    @property
    def dim(self) -> int:
        return comb(self.l, self.n)

    @property
    def rank_lut(self) -> np.ndarray:
        return _ext.colex_rank_lut(self.l)

    def rank(self, modes: ModeSet) -> int:
        mask = mask_of(modes)
        if popcount(mask) != self.n or mask >> self.l:
            raise InvalidInputError(f"{modes_of(mask)} is not an {self.n}-subset of 1..{self.l}")
        return sum(comb(m - 1, i + 1) for i, m in enumerate(modes_of(mask)))

    def unrank(self, index: int) -> int:
        if not (0 <= index < self.dim):
            raise InvalidInputError(f"index {index} out of range for dimension {self.dim}")
        mask = 0
        rest = int(index)
        for i in range(self.n, 0, -1):
            c = i - 1
            while comb(c + 1, i) <= rest:
                c += 1
            rest -= comb(c, i)
            mask |= 1 << c
        return mask

    def index(self, masks) -> np.ndarray:
        """Vectorized rank of masks (assumed to have popcount ``n``)."""
        return self.rank_lut[np.asarray(masks, dtype=np.int64)]


@lru_cache(maxsize=None)
def basis(l: int, n: int) -> FockBasis:
    return FockBasis(l, n)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes ``v(S)`` over a :class:`FockBasis`."""

    basis: FockBasis
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        if amps.shape != (self.basis.dim,):
            raise InvalidInputError(
                f"expected {self.basis.dim} amplitudes for (l, n) = "
                f"({self.basis.l}, {self.basis.n}), got {amps.shape[0]}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def l(self) -> int:
        return self.basis.l

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        norm = self.norm
        if norm == 0:
            raise InvalidInputError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amps / norm)

    def amplitude(self, modes: ModeSet) -> complex:
        return complex(self.amps[self.basis.rank(modes)])

    def inner(self, other: "StateVector") -> complex:
        if other.basis != self.basis:
            raise InvalidInputError("states live on different bases")
        return complex(np.vdot(self.amps, other.amps))

    def support(self, amp_tol: float = 1e-12) -> np.ndarray:
        """Masks of basis states with ``|v(S)| > amp_tol``."""
        return self.basis.states[np.abs(self.amps) > amp_tol]

    @classmethod
    def zeros(cls, l: int, n: int) -> "StateVector":
        b = basis(l, n)
        return cls(b, np.zeros(b.dim))

    @classmethod
    def basis_state(cls, l: int, modes: ModeSet) -> "StateVector":
        mask = mask_of(modes)
        b = basis(l, popcount(mask))
        amps = np.zeros(b.dim, dtype=np.complex128)
        amps[b.rank(mask)] = 1.0
        return cls(b, amps)

    @classmethod
    def from_amplitudes(cls, l: int, n: int, amplitudes: Mapping) -> "StateVector":
        """Build from ``{modes: amplitude}``; missing basis states are zero."""
        b = basis(l, n)
        amps = np.zeros(b.dim, dtype=np.complex128)
        for modes, value in amplitudes.items():
            amps[b.rank(modes)] += value
        return cls(b, amps)

    def to_json_dict(self) -> dict:
        entries = []
        for i in np.flatnonzero(self.amps):
            a = self.amps[i]
            entries.append(
                {"modes": list(modes_of(self.basis.states[i])), "re": float(a.real), "im": float(a.imag)}
            )
        return {"l": self.l, "n": self.n, "amplitudes": entries}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "StateVector":
        try:
            l, n = int(data["l"]), int(data["n"])
            entries = data["amplitudes"]
            b = basis(l, n)
            amps = np.zeros(b.dim, dtype=np.complex128)
            for e in entries:
                modes = [int(m) for m in e["modes"]]
                if modes != sorted(modes):
                    raise InvalidInputError(f"modes must be ascending, got {modes}")
                if any(m > l for m in modes):
                    raise InvalidInputError(f"mode out of range 1..{l}: {modes}")
                amps[b.rank(modes)] += complex(float(e.get("re", 0.0)), float(e.get("im", 0.0)))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed state document: {exc!r}") from exc
        return cls(b, amps)


def load_state(path) -> StateVector:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    return StateVector.from_json_dict(data)


def save_state(v: StateVector, path) -> None:
    Path(path).write_text(json.dumps(v.to_json_dict(), indent=1) + "\n")


@dataclass(frozen=True, eq=False)
class TensorState:
    """Element of H_{n-k} (x) H_{n+k} stored as a dense amplitude matrix."""

    left: FockBasis | None
    right: FockBasis | None
    matrix: np.ndarray = field(repr=False)

    @property
    def norm2(self) -> float:
        m = self.matrix
        return float(np.vdot(m, m).real)


# ---------------------------------------------------------------------------
# operator action


def apply_monomial(v: StateVector, Q: ModeSet, P: ModeSet) -> StateVector:
    """``Psi^dag_Q Psi_P |v>`` (annihilate ``P`` first, then create ``Q``)."""
    p, q = mask_of(P), mask_of(Q)
    l, n = v.l, v.n
    if (p | q) >> l:
        raise InvalidInputError(f"modes outside 1..{l}")
    n_out = n - popcount(p) + popcount(q)
    if not (0 <= n_out <= l) or popcount(p) > n:
        raise InvalidInputError(f"resulting particle number {n_out} outside 0..{l}")
    out_basis = basis(l, n_out)
    out = np.zeros(out_basis.dim, dtype=np.complex128)
    states = v.basis.states
    rest = states & ~p
    keep = ((states & p) == p) & ((rest & q) == 0) & (v.amps != 0)
    rest = rest[keep]
    sign = _sigma_vec(rest, p) * _sigma_vec(rest, q)
    out[out_basis.index(rest | q)] = sign * v.amps[keep]
    return StateVector(out_basis, out)


@lru_cache(maxsize=64)
def removal_table(l: int, m: int, k: int):
    """Cached kernel table of (T, R, T\\R, sigma(T\\R, R)) for the m-particle basis."""
    tables = _ext.removal_table(basis(l, m).states, _ext.colex_rank_lut(l), k)
    for t in tables:
        t.setflags(write=False)
    return tables


def annihilated_stack(v: StateVector, k: int) -> np.ndarray:
    """Matrix whose column ``R`` (colex rank of a k-subset) is ``Psi_R |v>``."""
    l, n = v.l, v.n
    out = np.zeros((comb(l, n - k), comb(l, k)), dtype=np.complex128)
    src, sub, dst, sign = removal_table(l, n, k)
    out[dst, sub] = sign * v.amps[src]
    return out


def created_stack(v: StateVector, k: int) -> np.ndarray:
    """Matrix whose column ``R`` is ``Psi^dag_R |v>`` on the (n+k)-particle basis."""
    l, n = v.l, v.n
    out = np.zeros((comb(l, n + k), comb(l, k)), dtype=np.complex128)
    src, sub, dst, sign = removal_table(l, n + k, k)
    out[src, sub] = sign * v.amps[dst]
    return out


def omega_power_apply(v: StateVector, k: int) -> TensorState:
    """``Omega^k |v>|v> / k!`` as ``sum_{|R|=k} Psi_R|v> (x) Psi^dag_R|v>``.

    The per-R ordering sign is the same for every R and drops out of all
    norms.  Returns an all-zero tensor when k exceeds ``min(n, l - n)``.
    """
    if k < 0:
        raise InvalidInputError(f"k must be non-negative, got {k}")
    l, n = v.l, v.n
    if k > n or n + k > l:
        left = basis(l, n - k) if k <= n else None
        right = basis(l, n + k) if n + k <= l else None
        shape = (left.dim if left else 0, right.dim if right else 0)
        return TensorState(left, right, np.zeros(shape, dtype=np.complex128))
    a = annihilated_stack(v, k)
    b = created_stack(v, k)
    return TensorState(basis(l, n - k), basis(l, n + k), a @ b.T)


# ---------------------------------------------------------------------------
# one-body rotations


def givens_decompose(u: np.ndarray):
    """Factor a unitary into adjacent-mode rotations and phases.

    Returns ``(rotations, phases)`` with ``u = g_1 g_2 ... g_N diag(phases)``,
    where each ``g`` is ``(p, block)``: a 2x2 unitary acting on 0-based
    neighbouring rows ``p, p + 1``.
    """
    w = np.array(u, dtype=np.complex128)
    l = w.shape[0]
    eliminations = []
    for j in range(l - 1):
        for i in range(l - 1, j, -1):
            a, b = w[i - 1, j], w[i, j]
            if b == 0:
                continue
            r = np.hypot(abs(a), abs(b))
            g = np.array([[np.conj(a), np.conj(b)], [-b, a]]) / r
            w[i - 1 : i + 1, :] = g @ w[i - 1 : i + 1, :]
            eliminations.append((i - 1, g))
    phases = np.diag(w).copy()
    rotations = [(p, g.conj().T) for p, g in eliminations]
    return rotations, phases


@lru_cache(maxsize=256)
def _pair_classes(l: int, n: int, p: int):
    b = basis(l, n)
    states = b.states
    lo, hi = 1 << p, 1 << (p + 1)
    has_lo = (states & lo) != 0
    has_hi = (states & hi) != 0
    only_lo = np.flatnonzero(has_lo & ~has_hi)
    only_hi = np.flatnonzero(~has_lo & has_hi)
    both = np.flatnonzero(has_lo & has_hi)
    partner_lo = b.index(states[only_lo] ^ (lo | hi))
    partner_hi = b.index(states[only_hi] ^ (lo | hi))
    return only_lo, partner_lo, only_hi, partner_hi, both


def _apply_block(amps: np.ndarray, l: int, n: int, p: int, w: np.ndarray) -> np.ndarray:
    only_lo, partner_lo, only_hi, partner_hi, both = _pair_classes(l, n, p)
    out = amps.copy()
    # psi^dag_p -> w00 psi^dag_p + w10 psi^dag_{p+1}; no modes sit between p and p+1
    out[only_lo] = w[0, 0] * amps[only_lo]
    out[only_hi] = w[1, 1] * amps[only_hi]
    out[partner_lo] += w[1, 0] * amps[only_lo]
    out[partner_hi] += w[0, 1] * amps[only_hi]
    out[both] = (w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0]) * amps[both]
    return out


def rotate_unitary(v: StateVector, u: np.ndarray) -> StateVector:
    """Apply the many-body image of the mode-space unitary ``u``.

    The image maps ``psi^dag_q`` to ``sum_p u[p, q] psi^dag_p``.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (v.l, v.l):
        raise InvalidInputError(f"unitary must be {v.l}x{v.l}, got {u.shape}")
    rotations, phases = givens_decompose(u)
    states = v.basis.states
    factor = np.ones(len(states), dtype=np.complex128)
    for p in range(v.l):
        factor[(states >> p) & 1 == 1] *= phases[p]
    amps = v.amps * factor
    for p, g in reversed(rotations):
        amps = _apply_block(amps, v.l, v.n, p, g)
    return StateVector(v.basis, amps)


def single_particle_rotate(v: StateVector, theta: np.ndarray, atol: float = 1e-12) -> StateVector:
    """Apply ``exp(i sum_pq theta[p, q] psi^dag_p psi_q)`` for Hermitian ``theta``."""
    theta = np.asarray(theta, dtype=np.complex128)
    if theta.shape != (v.l, v.l):
        raise InvalidInputError(f"generator must be {v.l}x{v.l}, got {theta.shape}")
    if np.max(np.abs(theta - theta.conj().T), initial=0.0) > atol:
        raise InvalidInputError("generator is not Hermitian")
    return rotate_unitary(v, scipy.linalg.expm(1j * theta))


def random_hermitian(l: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    x = rng.standard_normal((l, l)) + 1j * rng.standard_normal((l, l))
    return scale * (x + x.conj().T) / 2
