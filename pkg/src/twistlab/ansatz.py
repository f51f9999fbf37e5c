"""The polynomial G_k ansatz ``|v> = v(G) F(T_1, .., T_k) |G>``.

``T_j = sum theta_{P,Q} Psi^dag_Q Psi_P`` runs over excitations of order
``j`` relative to ``G``.  The T's commute and are nilpotent, so the Taylor
form of ``F`` gives an exact finite sum.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, factorial
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy import integrate

from .errors import InvalidInputError, SingularInputError
from .fock import (
    ModeSet,
    StateVector,
    _sigma_vec,
    basis,
    mask_of,
    modes_of,
    popcount,
    sign_concat,
)
from .wick import ExcitationKey, connected_amplitudes, excitations, nu, partition_vectors

QUAD_EPSABS = 1e-12


@dataclass(frozen=True, eq=False)
class AnsatzParams:
    l: int
    n: int
    G: int
    k: int
    theta: dict = field(repr=False)
    vG: complex = 1.0

    def __post_init__(self):
        if not (0 <= self.n <= self.l):
            raise InvalidInputError(f"invalid (l, n) = ({self.l}, {self.n})")
        g = mask_of(self.G)
        if popcount(g) != self.n or g >> self.l:
            raise InvalidInputError(f"G must be an {self.n}-subset of 1..{self.l}")
        if self.k < 1:
            raise InvalidInputError("k must be at least 1")
        theta = {}
        for key, value in self.theta.items():
            p, q = mask_of(key[0]), mask_of(key[1])
            size = popcount(p)
            if p & ~g or q & g or q >> self.l or size != popcount(q) or not (1 <= size <= self.k):
                raise InvalidInputError(
                    f"invalid excitation P={modes_of(p)}, Q={modes_of(q)} for G={modes_of(g)}, k={self.k}"
                )
            theta[ExcitationKey(p, q)] = complex(value)
        object.__setattr__(self, "G", g)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "vG", complex(self.vG))

    def to_json_dict(self) -> dict:
        return {
            "l": self.l,
            "n": self.n,
            "G": list(modes_of(self.G)),
            "k": self.k,
            "vG": {"re": self.vG.real, "im": self.vG.imag},
            "theta": [
                {"P": list(modes_of(key.P)), "Q": list(modes_of(key.Q)), "re": t.real, "im": t.imag}
                for key, t in sorted(self.theta.items())
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "AnsatzParams":
        try:
            theta = {
                (mask_of(e["P"]), mask_of(e["Q"])): complex(float(e["re"]), float(e["im"]))
                for e in d["theta"]
            }
            vg = complex(float(d["vG"]["re"]), float(d["vG"]["im"]))
            return cls(int(d["l"]), int(d["n"]), mask_of(d["G"]), int(d["k"]), theta, vg)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed ansatz parameters: {exc}") from exc


def load_params(path) -> AnsatzParams:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    return AnsatzParams.from_json_dict(data)


def save_params(params: AnsatzParams, path) -> None:
    Path(path).write_text(json.dumps(params.to_json_dict(), indent=1) + "\n")


def parameter_count(l: int, n: int, k: int) -> int:
    return sum(comb(n, j) * comb(l - n, j) for j in range(1, k + 1))


# ---------------------------------------------------------------------------
# generating function F


def _split(x) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of ``a'(mu)`` and ``s(mu)`` as polynomials in ``mu`` (low to high)."""
    x = np.asarray(x)
    deg = len(x)
    da = np.zeros(deg + 1, dtype=x.dtype)
    s = np.zeros(deg + 1, dtype=x.dtype)
    s[0] = 0.5
    for i, xi in enumerate(x, start=1):
        if i % 2:
            da[i - 1] = i * xi
        else:
            s[i] = xi
    return da, s


def _check_poles(s: np.ndarray, tol: float = 1e-12) -> None:
    coeffs = np.trim_zeros(s[::-1], "f")
    roots = np.roots(coeffs) if len(coeffs) > 1 else np.array([])
    for r in roots:
        if abs(r.imag) <= tol and -tol <= r.real <= 1 + tol:
            raise SingularInputError(f"1 + 2(x_2 mu^2 + x_4 mu^4 + ..) vanishes at mu = {r.real:.6g}")


def f_scalar(x, epsabs: float = QUAD_EPSABS) -> complex | float:
    """Closed form of ``F(x_1, .., x_k)`` by quadrature.

    ``F = sqrt(2 s(1)) exp(int_0^1 a'(mu) / (2 s(mu)) dmu)`` with
    ``a(mu) = x_1 mu + x_3 mu^3 + ..`` and ``s(mu) = 1/2 + x_2 mu^2 + ..``.
    Complex arguments are accepted (principal square root).
    """
    x = np.atleast_1d(np.asarray(x))
    is_complex = np.iscomplexobj(x)
    x = x.astype(np.complex128 if is_complex else np.float64)
    if len(x) == 0:
        return 1.0
    da, s = _split(x)
    _check_poles(s)

    def integrand(mu):
        return np.polynomial.polynomial.polyval(mu, da) / (2 * np.polynomial.polynomial.polyval(mu, s))

    if is_complex:
        re = integrate.quad(lambda m: integrand(m).real, 0, 1, epsabs=epsabs, epsrel=epsabs, limit=200)[0]
        im = integrate.quad(lambda m: integrand(m).imag, 0, 1, epsabs=epsabs, epsrel=epsabs, limit=200)[0]
        return complex(np.sqrt(2 * s.sum() + 0j) * np.exp(re + 1j * im))
    val = integrate.quad(integrand, 0, 1, epsabs=epsabs, epsrel=epsabs, limit=200)[0]
    return float(np.sqrt(2 * s.sum()) * np.exp(val))


def f_taylor(x, max_weight: int) -> complex | float:
    """Truncated Taylor form ``sum_{k.m <= max_weight} nu(m) / prod m_i! x^m``."""
    x = np.atleast_1d(np.asarray(x))
    total = 0
    for m in partition_vectors(max_weight, len(x)):
        term = float(nu(m))
        for xi, mi in zip(x, m):
            term = term * xi**mi / factorial(mi)
        total = total + term
    return total


# ---------------------------------------------------------------------------
# state construction


def excitation_operator(params: AnsatzParams, order: int) -> sp.csr_matrix:
    """Sparse matrix of ``T_order`` on the fixed-n basis."""
    b = basis(params.l, params.n)
    states = b.states
    rows, cols, vals = [], [], []
    for key, t in params.theta.items():
        if popcount(key.P) != order or t == 0:
            continue
        ok = ((states & key.P) == key.P) & ((states & key.Q) == 0)
        src = states[ok]
        rest = src & ~key.P
        sign = _sigma_vec(rest, key.P) * _sigma_vec(rest, key.Q)
        rows.append(b.rank_lut[rest | key.Q])
        cols.append(np.nonzero(ok)[0])
        vals.append(sign * t)
    if not rows:
        return sp.csr_matrix((b.dim, b.dim), dtype=np.complex128)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(b.dim, b.dim),
        dtype=np.complex128,
    )


def build_state(params: AnsatzParams, max_weight: int | None = None) -> StateVector:
    """``v(G) sum_m nu(m) / prod m_i! T_1^m_1 .. T_k^m_k |G>``.

    The sum stops at ``k . m <= min(n, l - n)``; higher terms vanish
    identically and can be included by passing a larger ``max_weight``.

    Parameters fitted to a G_k state rebuild that state.  Arbitrary
    parameters need not give a G_k state: with random ``theta`` at ``k = 2``
    the result typically has ``omega_2 > 0`` (and ``omega_3 = 0``).
    """
    if max_weight is None:
        max_weight = min(params.n, params.l - params.n)
    b = basis(params.l, params.n)
    ops = [excitation_operator(params, j) for j in range(1, params.k + 1)]
    ref = np.zeros(b.dim, dtype=np.complex128)
    ref[b.rank(params.G)] = 1.0
    cache: dict[tuple[int, ...], np.ndarray] = {(0,) * params.k: ref}

    def power(m: tuple[int, ...]) -> np.ndarray:
        if m not in cache:
            j = max(i for i, c in enumerate(m) if c)
            prev = m[:j] + (m[j] - 1,) + m[j + 1 :]
            cache[m] = ops[j] @ power(prev)
        return cache[m]

    out = np.zeros(b.dim, dtype=np.complex128)
    for m in sorted(partition_vectors(max_weight, params.k), key=sum):
        coef = float(nu(m))
        for c in m:
            coef /= factorial(c)
        out += coef * power(m)
    return StateVector(b, params.vG * out)


def fit(v: StateVector, G: ModeSet, k: int, ref_tol: float = 1e-9) -> AnsatzParams:
    """Ansatz parameters ``theta = v^c sigma(G - P, P)`` read off ``v``.

    Exact (up to rounding) when ``v`` lies in G_k.
    """
    g = mask_of(G)
    ca = connected_amplitudes(v, g, k, ref_tol=ref_tol)
    theta = {key: vc * sign_concat(g & ~key.P, key.P) for key, vc in ca.table.items()}
    return AnsatzParams(v.l, v.n, g, k, theta, v.amplitude(g))


def fidelity(v: StateVector, w: StateVector) -> float:
    """``|<v|w>| / (|v| |w|)``."""
    if (v.l, v.n) != (w.l, w.n):
        raise InvalidInputError("states live in different spaces")
    den = v.norm * w.norm
    if den == 0:
        raise InvalidInputError("fidelity of a zero vector")
    return float(abs(np.vdot(v.amps, w.amps)) / den)


def random_params(
    l: int, n: int, k: int, rng: np.random.Generator, scale: float = 0.5, G: ModeSet | None = None
) -> AnsatzParams:
    """Random complex ``theta`` for every excitation up to order ``k``."""
    g = mask_of(G) if G is not None else (1 << n) - 1
    theta = {}
    for j in range(1, k + 1):
        for key in excitations(g, l, j):
            theta[key] = scale * complex(rng.standard_normal(), rng.standard_normal())
    return AnsatzParams(l, n, g, k, theta, 1.0)
