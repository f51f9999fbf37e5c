"""Model Hamiltonians in the fixed-n sector and exact diagonalization.

Operators are written as strings of elementary ladder operators, applied
right to left.  The sign of ``psi_p`` or ``psi^dag_p`` on a basis state is
``(-1)`` to the number of occupied modes above ``p``, consistent with
``|S> = psi^dag_{s_n} .. psi^dag_{s_1} |0>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import ConsistencyError, InvalidInputError
from .fock import FockBasis, StateVector, basis

HERMITIAN_TOL = 1e-12
RESIDUAL_TOL = 1e-9

# (mode, is_creation)
Ladder = tuple[int, bool]


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    basis: FockBasis
    matrix: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max(initial=0.0))


def apply_ladder_string(states: np.ndarray, ops: Sequence[Ladder]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Act with ``ops[0] ops[1] .. ops[-1]`` on each basis state.

    Returns ``(valid, targets, signs)``; entries with ``valid == False`` are
    annihilated.
    """
    cur = np.asarray(states, dtype=np.int64).copy()
    valid = np.ones(len(cur), dtype=bool)
    parity = np.zeros(len(cur), dtype=np.int64)
    for mode, create in reversed(ops):
        bit = np.int64(1) << (mode - 1)
        occupied = (cur & bit) != 0
        valid &= ~occupied if create else occupied
        parity += np.bitwise_count(cur >> mode)
        cur = cur | bit if create else cur & ~bit
    signs = np.where(parity % 2, -1.0, 1.0)
    return valid, cur, signs


def operator_matrix(l: int, n: int, terms: Iterable[tuple[complex, Sequence[Ladder]]]) -> np.ndarray:
    """Dense matrix of ``sum coef * ladder string`` within the (l, n) sector."""
    b = basis(l, n)
    out = np.zeros((b.dim, b.dim), dtype=np.complex128)
    cols = np.arange(b.dim)
    for coef, ops in terms:
        if coef == 0:
            continue
        if sum(1 if c else -1 for _, c in ops) != 0:
            raise InvalidInputError("term does not conserve particle number")
        valid, targets, signs = apply_ladder_string(b.states, ops)
        np.add.at(out, (b.rank_lut[targets[valid]], cols[valid]), coef * signs[valid])
    return out


def hubbard_mode(site: int, spin: str) -> int:
    """Mode index of ``(site, spin)``: up on odd, down on even modes."""
    return 2 * site - 1 if spin == "up" else 2 * site


def hubbard(sites: int, t: float, U: float) -> HamiltonianMatrix:
    """Periodic 1D Hubbard chain at half filling.

    ``H = -t sum_{x, s} (psi^dag_{x,s} psi_{x+1,s} + h.c.) + U sum_x n_{x,up} n_{x,down}``
    with the bond sum running over ``x = 1..L`` literally, so for ``L = 2``
    the pair is coupled twice.
    """
    if sites < 2:
        raise InvalidInputError("need at least 2 sites")
    l = 2 * sites
    terms = []
    for x in range(1, sites + 1):
        y = x % sites + 1
        for spin in ("up", "down"):
            a, b = hubbard_mode(x, spin), hubbard_mode(y, spin)
            terms.append((-t, [(a, True), (b, False)]))
            terms.append((-t, [(b, True), (a, False)]))
        up, dn = hubbard_mode(x, "up"), hubbard_mode(x, "down")
        terms.append((U, [(up, True), (up, False), (dn, True), (dn, False)]))
    mat = operator_matrix(l, sites, terms)
    return HamiltonianMatrix(basis(l, sites), mat, {"model": "hubbard", "sites": sites, "t": t, "U": U})


def syk_couplings(l: int, seed: int) -> dict[tuple[int, int, int, int], complex]:
    """Couplings ``t_abcd`` for ``a > b > c > d``.

    Drawn from PCG64 (numpy ``default_rng``) standard normals, real part then
    imaginary part per coupling, in lexicographic order of ``(d, c, b, a)``;
    each part has variance ``1 / (2 (2l)^3)``.
    """
    if l < 4:
        raise InvalidInputError("SYK needs at least 4 modes")
    rng = np.random.default_rng(seed)
    quads = list(combinations(range(1, l + 1), 4))
    z = rng.standard_normal((len(quads), 2)) * np.sqrt(1.0 / (2 * (2 * l) ** 3))
    return {(a, b, c, d): complex(re, im) for (d, c, b, a), (re, im) in zip(quads, z)}


def syk(l: int, seed: int, n: int | None = None) -> HamiltonianMatrix:
    """Complex SYK ``H = sum t_abcd psi^dag_a psi^dag_b psi_c psi_d + h.c.``."""
    if n is None:
        n = l // 2
    couplings = syk_couplings(l, seed)
    terms = []
    for (a, b, c, d), t in couplings.items():
        terms.append((t, [(a, True), (b, True), (c, False), (d, False)]))
        terms.append((np.conj(t), [(d, True), (c, True), (b, False), (a, False)]))
    mat = operator_matrix(l, n, terms)
    return HamiltonianMatrix(basis(l, n), mat, {"model": "syk", "l": l, "n": n, "seed": seed})


def sz_sector(b: FockBasis, sz2: int) -> np.ndarray:
    """Indices of basis states with ``N_up - N_down = sz2`` (up = odd modes)."""
    up_bits = sum(1 << (m - 1) for m in range(1, b.l + 1, 2))
    n_up = np.bitwise_count(b.states & up_bits).astype(np.int64)
    return np.nonzero(2 * n_up - b.n == sz2)[0]


def eigenstates(
    H: HamiltonianMatrix,
    count: int = 1,
    sz2: int | None = None,
    indices: Sequence[int] | None = None,
) -> list[tuple[float, StateVector]]:
    """Lowest ``count`` eigenpairs (or those at ``indices``), ascending.

    ``sz2`` restricts to the sector ``N_up - N_down = sz2`` before
    diagonalizing; vectors are embedded back into the full basis.
    """
    if H.hermiticity_error() > HERMITIAN_TOL * max(1.0, np.abs(H.matrix).max(initial=0.0)):
        raise InvalidInputError("matrix is not Hermitian")
    idx = np.arange(H.dim) if sz2 is None else sz_sector(H.basis, sz2)
    if len(idx) == 0:
        raise InvalidInputError(f"empty S_z sector {sz2}")
    block = H.matrix[np.ix_(idx, idx)]
    evals, evecs = scipy.linalg.eigh(block)
    picks = list(range(count)) if indices is None else list(indices)
    if any(not (0 <= i < len(evals)) for i in picks):
        raise InvalidInputError(f"eigenvalue index out of range 0..{len(evals) - 1}")
    scale = max(np.linalg.norm(block, 2), 1e-300)
    out = []
    for i in picks:
        vec = evecs[:, i]
        resid = np.linalg.norm(block @ vec - evals[i] * vec)
        if resid > RESIDUAL_TOL * scale:
            raise ConsistencyError(f"eigen-residual {resid:.3e} exceeds tolerance")
        full = np.zeros(H.dim, dtype=np.complex128)
        full[idx] = vec
        out.append((float(evals[i]), StateVector(H.basis, full)))
    return out


def spectrum(H: HamiltonianMatrix, sz2: int | None = None) -> np.ndarray:
    idx = np.arange(H.dim) if sz2 is None else sz_sector(H.basis, sz2)
    return scipy.linalg.eigvalsh(H.matrix[np.ix_(idx, idx)])


def relative_energy_index(evals: np.ndarray, target: float) -> int:
    """Index whose ``(e - e_min) / (e_max - e_min)`` is closest to ``target``."""
    lo, hi = evals[0], evals[-1]
    rel = (evals - lo) / (hi - lo) if hi > lo else np.zeros_like(evals)
    return int(np.argmin(np.abs(rel - target)))
