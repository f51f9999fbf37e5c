"""Reduced density matrices and twisted purities.

Index convention: k-RDMs are indexed by *unordered* k-subsets in colex rank
order, with ``rho_k[Q, P] = <v| Psi^dag_P Psi_Q |v>`` and
``rho~_k[Q, P] = <v| Psi_Q Psi^dag_P |v>``.  With this convention
``Tr rho_k = binom(n, k)`` and ``Tr rho~_k = binom(l - n, k)``; the sum over
ordered k-tuples would carry an extra ``k!``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from . import _ext
from .errors import ConsistencyError, InvalidInputError, NormalizationError
from .fock import (
    StateVector,
    _sigma_vec,
    annihilated_stack,
    basis,
    created_stack,
    omega_power_apply,
)

METHODS = ("rdm-trace", "residual-sum", "tensor-apply")
NORM_TOL = 1e-9
AGREE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class KRdm:
    k: int
    kind: str  # "ordinary" | "twisted"
    matrix: np.ndarray = field(repr=False)
    l: int
    n: int

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


@dataclass(frozen=True, eq=False)
class PuritySpectrum:
    """Twisted purities ``omega_0 .. omega_kmax`` of one state."""

    omegas: np.ndarray
    method: str
    l: int
    n: int
    checked: bool = False

    def __post_init__(self):
        omegas = np.array(self.omegas, dtype=float)
        omegas.setflags(write=False)
        object.__setattr__(self, "omegas", omegas)

    @property
    def kmax(self) -> int:
        return len(self.omegas) - 1

    def __getitem__(self, k: int) -> float:
        return float(self.omegas[k])

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        buf.write("k,omega\n")
        for k, w in enumerate(self.omegas):
            buf.write(f"{k},{w:.16e}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, l: int, n: int, method: str = "csv") -> "PuritySpectrum":
        rows = [r for r in text.splitlines() if r and not r.startswith("#")]
        if not rows or rows[0].strip() != "k,omega":
            raise InvalidInputError("spectrum CSV must start with the header 'k,omega'")
        values = {}
        for row in rows[1:]:
            k, w = row.split(",")
            values[int(k)] = float(w)
        if sorted(values) != list(range(len(values))):
            raise InvalidInputError("spectrum CSV rows must cover k = 0..kmax")
        return cls(np.array([values[k] for k in range(len(values))]), method, l, n)


def _check_normalized(v: StateVector) -> None:
    if abs(v.norm - 1.0) > NORM_TOL:
        raise NormalizationError(f"state norm {v.norm!r} differs from 1 by more than {NORM_TOL}")


def rdm(v: StateVector, k: int) -> KRdm:
    if not (1 <= k <= v.n):
        raise InvalidInputError(f"rdm order must lie in 1..n={v.n}, got {k}")
    a = annihilated_stack(v, k)
    return KRdm(k, "ordinary", a.T @ a.conj(), v.l, v.n)


def twisted_rdm_direct(v: StateVector, k: int) -> KRdm:
    if not (1 <= k <= v.n):
        raise InvalidInputError(f"rdm order must lie in 1..n={v.n}, got {k}")
    if v.n + k > v.l:
        size = comb(v.l, k)
        return KRdm(k, "twisted", np.zeros((size, size), dtype=np.complex128), v.l, v.n)
    b = created_stack(v, k)
    return KRdm(k, "twisted", b.conj().T @ b, v.l, v.n)


def twisted_rdm_from_rdms(rdms: Sequence[KRdm]) -> KRdm:
    """Rebuild ``rho~_k`` from ``rho_1 .. rho_k`` by normal ordering.

    ``Psi_Q Psi^dag_P`` expands over contracted sets ``C`` common to ``Q`` and
    ``P``; with ``Q' = Q\\C`` and ``P' = P\\C`` each term carries
    ``sigma(Q', C) sigma(P', C) (-1)^{|P'|} Psi^dag_{P'} Psi_{Q'}``.
    """
    rdms = sorted(rdms, key=lambda r: r.k)
    if not rdms:
        raise InvalidInputError("need at least rho_1")
    l, n = rdms[0].l, rdms[0].n
    k = rdms[-1].k
    if [r.k for r in rdms] != list(range(1, k + 1)):
        raise InvalidInputError("need the complete set rho_1 .. rho_k")
    if any(r.l != l or r.n != n for r in rdms) or any(r.kind != "ordinary" for r in rdms):
        raise InvalidInputError("inconsistent RDM inputs")
    lut = _ext.colex_rank_lut(l)
    size = comb(l, k)
    out = np.zeros((size, size), dtype=np.complex128)
    for j in range(0, k + 1):  # j = |C|
        rest = k - j
        if rest == 0:
            sub_states = np.zeros(1, dtype=np.int64)
            sub = np.ones((1, 1), dtype=np.complex128)
        else:
            sub_states = basis(l, rest).states
            sub = rdms[rest - 1].matrix
        sign_rest = -1 if rest % 2 else 1
        for c in basis(l, j).states.tolist():
            ok = (sub_states & c) == 0
            rows = sub_states[ok]
            sig = _sigma_vec(rows, c)
            idx = lut[rows | c]
            block = sub[np.ix_(ok, ok)] * np.outer(sig, sig) * sign_rest
            out[np.ix_(idx, idx)] += block
    return KRdm(k, "twisted", out, l, n)


def _omega_rdm_trace(v: StateVector, k: int) -> float:
    if k == 0:
        return v.norm**4
    rho = rdm(v, k).matrix
    rt = twisted_rdm_direct(v, k).matrix
    return float(np.sum(rho * rt.T).real)


def _omega_residual_sum(v: StateVector, k: int) -> float:
    lut = _ext.colex_rank_lut(v.l)
    return float(
        _ext.residual_sum(v.amps, lut, basis(v.l, v.n - k).states, basis(v.l, v.n + k).states, k)
    )


def _omega_tensor(v: StateVector, k: int) -> float:
    return omega_power_apply(v, k).norm2


_DISPATCH = {
    "rdm-trace": _omega_rdm_trace,
    "residual-sum": _omega_residual_sum,
    "tensor-apply": _omega_tensor,
}


def twisted_purity(v: StateVector, k: int, method: str = "rdm-trace") -> float:
    """``omega_k = |Omega^k |v>|v> / k!|^2`` by the chosen method."""
    if method not in _DISPATCH:
        raise InvalidInputError(f"unknown method {method!r}; choose from {METHODS}")
    if k < 0:
        raise InvalidInputError(f"k must be non-negative, got {k}")
    _check_normalized(v)
    if k > min(v.n, v.l - v.n):
        return 0.0
    return _DISPATCH[method](v, k)


def default_method(k: int) -> str:
    return "rdm-trace" if k <= 3 else "tensor-apply"


def purity_spectrum(
    v: StateVector,
    kmax: int | None = None,
    method: str | None = None,
    cross_check: bool = False,
) -> PuritySpectrum:
    """omega_0 .. omega_kmax; ``method=None`` picks the cheaper method per k.

    With ``cross_check`` every nonzero entry is recomputed by a second method
    and a :class:`ConsistencyError` is raised on disagreement.
    """
    if kmax is None:
        kmax = v.n
    if not (0 <= kmax <= v.n):
        raise InvalidInputError(f"kmax must lie in 0..n={v.n}, got {kmax}")
    _check_normalized(v)
    omegas = []
    for k in range(kmax + 1):
        m = method or default_method(k)
        w = twisted_purity(v, k, m)
        if cross_check and 0 < k <= min(v.n, v.l - v.n):
            other = "tensor-apply" if m != "tensor-apply" else "rdm-trace"
            w2 = twisted_purity(v, k, other)
            if abs(w - w2) > AGREE_RTOL * max(1.0, abs(w)):
                raise ConsistencyError(f"omega_{k}: {m} gives {w!r}, {other} gives {w2!r}")
        omegas.append(w)
    return PuritySpectrum(np.array(omegas), method or "auto", v.l, v.n, checked=cross_check)


def purity_upper_bound(l: int, n: int, k: int) -> float:
    if not (0 <= k <= min(n, l - n)):
        raise InvalidInputError(f"k must lie in 0..min(n, l-n), got {k}")
    return float(comb(n, k) * comb(l - n, k))


def generating_function(spec: PuritySpectrum, beta: float) -> float:
    """``Z(beta) = sum_k omega_k beta^(2k)`` over a complete spectrum."""
    if spec.kmax < min(spec.n, spec.l - spec.n):
        raise InvalidInputError("generating function needs omega_k up to min(n, l - n)")
    b2 = float(beta) ** 2
    return float(sum(w * b2**k for k, w in enumerate(spec.omegas)))


__all__ = [
    "KRdm",
    "METHODS",
    "PuritySpectrum",
    "generating_function",
    "purity_spectrum",
    "purity_upper_bound",
    "rdm",
    "twisted_purity",
    "twisted_rdm_direct",
    "twisted_rdm_from_rdms",
]
