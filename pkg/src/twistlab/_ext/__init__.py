"""Hot loops of the package, with a compiled and a pure-numpy implementation.

The compiled module is built from ``_ckernels.pyx`` when the package is
installed.  If it is missing, or ``TWISTLAB_PURE_PYTHON=1`` is set, the numpy
implementation in ``_pykernels`` is used instead.  Both expose the same three
functions:

removal_table(states, rank_lut, k)
    All pairs (T, R) with R a k-subset of the basis state T, as flat arrays of
    (index of T, colex rank of R, colex rank of T\\R, sign of sigma(T\\R, R)).
residual_sum(amps, rank_lut, a_states, b_states, k)
    Sum of squared moduli of the generalized Pluecker components.
colex_rank_lut(l)
    Colex rank of every l-bit mask within its popcount class.
"""
import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

if os.environ.get("TWISTLAB_PURE_PYTHON", "") not in ("", "0") or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = BACKENDS[BACKEND]


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None


def removal_table(states, rank_lut, k):
    return _impl.removal_table(states, rank_lut, k)


def residual_sum(amps, rank_lut, a_states, b_states, k):
    return _impl.residual_sum(amps, rank_lut, a_states, b_states, k)


colex_rank_lut = _pykernels.colex_rank_lut
