"""Closed-form baselines: Haar averages, Bell products and wedge products."""
from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from typing import Sequence

import numpy as np

from .corrmeas import PuritySpectrum, purity_spectrum
from .errors import InvalidInputError
from .fock import StateVector, basis, mask_of


def haar_average_fraction(l: int, n: int, k: int, sign_corrected: bool = False) -> Fraction:
    """Closed-form real-Haar average of ``omega_k`` as a fraction.

    The expression has two equivalent forms, a binomial sum and a factorial
    form; both are evaluated and required to agree.

    By default the two terms are added.  The true average (checked against
    the exact four-point moment and Monte-Carlo sampling) carries a relative
    sign ``(-1)^k`` between them, so the default value is only right for
    even ``k``.  ``sign_corrected=True`` returns the true average
    for ``k >= 1``.  At ``k = 0`` neither form gives 1; they return
    ``(d + 1) / (d + 2)`` with ``d = binom(l, n)``.
    """
    if not (0 <= n <= l):
        raise InvalidInputError(f"invalid (l, n) = ({l}, {n})")
    if not (0 <= k <= min(n, l - n)):
        raise InvalidInputError(f"k must lie in 0..min(n, l-n) = {min(n, l - n)}, got {k}")
    sign = (-1) ** k if sign_corrected else 1
    d = comb(l, n)
    first = Fraction(
        comb(l, k) * comb(l - k, n) * comb(l - k, n - k)
        + sign * comb(l, n - k) * comb(l - n, k) * comb(l - n + k, k),
        d * (d + 2),
    )
    second = Fraction(1, d + 2) * Fraction(
        factorial(k) * factorial(l - k) + sign * factorial(n) * factorial(l - n),
        factorial(k) ** 2 * factorial(n - k) * factorial(l - n - k),
    )
    if first != second:
        raise ArithmeticError(f"closed forms disagree at (l, n, k) = ({l}, {n}, {k})")
    return first


def haar_average_exact(l: int, n: int, k: int, sign_corrected: bool = False) -> float:
    return float(haar_average_fraction(l, n, k, sign_corrected))


def haar_sample(l: int, n: int, seed) -> StateVector:
    """Real Gaussian vector normalized to the unit sphere.

    ``seed`` is anything ``numpy.random.default_rng`` accepts.
    """
    rng = np.random.default_rng(seed)
    b = basis(l, n)
    x = rng.standard_normal(b.dim)
    return StateVector(b, x / np.linalg.norm(x))


def haar_statistics(
    l: int, n: int, samples: int, seed: int, kmax: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo mean and standard error of ``omega_0..omega_kmax``.

    Each sample draws from its own stream spawned from ``seed``.
    """
    if samples < 2:
        raise InvalidInputError("need at least 2 samples")
    kmax = min(n, l - n) if kmax is None else kmax
    streams = np.random.SeedSequence(seed).spawn(samples)
    data = np.array([purity_spectrum(haar_sample(l, n, s), kmax).omegas for s in streams])
    return data.mean(axis=0), data.std(axis=0, ddof=1) / np.sqrt(samples)


def bell_state() -> StateVector:
    """``(|1,2> + |3,4>) / sqrt(2)``."""
    b = basis(4, 2)
    amps = np.zeros(b.dim, dtype=np.complex128)
    amps[b.rank(mask_of([1, 2]))] = amps[b.rank(mask_of([3, 4]))] = 1 / np.sqrt(2)
    return StateVector(b, amps)


def bell_product_coefficients(copies: int) -> list[int]:
    """Integer coefficients of ``(1 + x + x^2)^copies``."""
    if copies < 1:
        raise InvalidInputError("copies must be at least 1")
    coeffs = [1]
    for _ in range(copies):
        nxt = [0] * (len(coeffs) + 2)
        for i, c in enumerate(coeffs):
            for j in range(3):
                nxt[i + j] += c
        coeffs = nxt
    return coeffs


def bell_product_spectrum(copies: int) -> PuritySpectrum:
    coeffs = bell_product_coefficients(copies)
    return PuritySpectrum(np.array(coeffs, dtype=float), "closed-form", 4 * copies, 2 * copies)


def embed_product(parts: Sequence[StateVector]) -> StateVector:
    """Wedge product ``v_1 ^ v_2 ^ ..`` on consecutive mode blocks.

    Part ``i`` occupies the modes right after those of part ``i - 1``; with
    that ordering the amplitude of ``S_1 + S_2 + ..`` is the plain product.
    """
    if not parts:
        raise InvalidInputError("need at least one part")
    masks = np.zeros(1, dtype=np.int64)
    amps = np.ones(1, dtype=np.complex128)
    offset = 0
    n = 0
    for part in parts:
        if not isinstance(part, StateVector):
            raise InvalidInputError("parts must be StateVector instances")
        masks = (masks[:, None] | (part.basis.states[None, :] << offset)).ravel()
        amps = (amps[:, None] * part.amps[None, :]).ravel()
        offset += part.l
        n += part.n
    b = basis(offset, n)
    out = np.zeros(b.dim, dtype=np.complex128)
    out[b.index(masks)] = amps
    return StateVector(b, out)
