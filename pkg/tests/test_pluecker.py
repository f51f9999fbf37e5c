from itertools import combinations

import numpy as np
import pytest

from conftest import random_state
from oracles import creation_string, embed, ladders
from twistlab.analytic import bell_state
from twistlab.corrmeas import twisted_purity
from twistlab.errors import InvalidInputError
from twistlab.fock import StateVector, mask_of, random_hermitian, single_particle_rotate
from twistlab.pluecker import (
    ci_dimension,
    is_in_gk,
    random_ci_state,
    residual_component,
    residual_components,
    support_diameter,
    support_radius,
)

V1 = StateVector.from_amplitudes(8, 4, {(1, 2, 3, 4): 2**-0.5, (1, 2, 5, 6): 2**-0.5})
V2 = StateVector.from_amplitudes(8, 4, {(1, 2, 3, 4): 2**-0.5, (5, 6, 7, 8): 2**-0.5})


def component_oracle(v, A, B, k):
    ann, cre = ladders(v.l)
    dim = 1 << v.l
    full = embed(v.l, v.n, v.amps)
    total = 0j
    for R in combinations(range(1, v.l + 1), k):
        up = creation_string(cre, R, dim)
        total += (up.T @ full)[mask_of(A)] * (up @ full)[mask_of(B)]
    return total


def test_bell_component():
    assert abs(residual_component(bell_state(), [1], [2, 3, 4], 1) - 0.5) < 1e-15


def test_components_match_oracle(rng):
    v = random_state(6, 3, rng)
    for A, B in [((1, 2), (3, 4, 5, 6)), ((2, 5), (1, 3, 4, 6)), ((1,), (2, 3, 4, 5, 6))]:
        k = 3 - len(A)
        assert abs(residual_component(v, A, B, k) - component_oracle(v, A, B, k)) < 1e-13


def test_component_norm_is_omega(rng):
    v = random_state(6, 3, rng)
    for k in (1, 2):
        comps = residual_components(v, k)
        assert abs(sum(abs(c) ** 2 for c in comps.values()) - twisted_purity(v, k)) < 1e-12


def test_component_shape_checked():
    with pytest.raises(InvalidInputError):
        residual_component(bell_state(), [1, 2], [3, 4], 1)


def test_ghz_discrimination():
    ok1, w1 = is_in_gk(V1, 3)
    ok2, w2 = is_in_gk(V2, 3)
    assert ok1 and w1 < 1e-12
    assert not ok2 and w2 > 1e-2
    assert support_diameter(V1) == 2
    assert support_diameter(V2) == 4


def test_support_radius_and_dimension():
    assert support_radius(V1, [1, 2, 3, 4]) == 4
    assert support_radius(V2, [1, 2, 3, 4]) == 8
    assert ci_dimension(12, 6, 5) == 262
    assert ci_dimension(8, 4, 3) == 17


@pytest.mark.parametrize("radius", [2, 4])
def test_ci_states_are_in_class(radius, rng):
    v = random_ci_state(10, 5, radius, rng)
    assert support_radius(v, [1, 2, 3, 4, 5]) <= radius
    w = single_particle_rotate(v, random_hermitian(10, rng))
    assert twisted_purity(w, radius + 1) < 1e-12


def test_exact_excitation_levels(rng):
    v = random_ci_state(8, 4, 4, rng, exact_excitations=(2,))
    dist = {bin(int(s) ^ 0b1111).count("1") for s in v.support()}
    assert dist <= {0, 4}
