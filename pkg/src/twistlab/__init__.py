"""Twisted purities and k-body correlation classes of fermionic states.

The package works with exact state vectors of ``n`` fermions on ``l`` modes
(modes are 1-based).  Submodules:

fock       basis, sign algebra, monomials, Omega^k action, one-body rotations
corrmeas   k-RDMs, twisted k-RDMs, twisted purities, generating function
pluecker   generalized Pluecker components, class membership, CI diagnostics
wick       connected amplitudes, recursive and cumulant-form Wick rules, nu(m)
ansatz     polynomial ansatz F(T_1..T_k)|G>, fitting and rebuilding states
models     Hubbard ring and complex SYK Hamiltonians, exact diagonalization
analytic   Haar averages, Bell products, wedge products
"""
from ._ext import BACKEND
from .errors import InvalidInputError, ReferenceAmplitudeError, SingularInputError
from .fock import FockBasis, StateVector, TensorState
from .corrmeas import KRdm, PuritySpectrum, purity_spectrum, twisted_purity

__all__ = [
    "BACKEND",
    "FockBasis",
    "InvalidInputError",
    "KRdm",
    "PuritySpectrum",
    "ReferenceAmplitudeError",
    "SingularInputError",
    "StateVector",
    "TensorState",
    "purity_spectrum",
    "twisted_purity",
]

__version__ = "0.1.0"
