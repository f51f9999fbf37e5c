
import numpy as np
import pytest

from oracles import colex_states, ladders
from twistlab.corrmeas import purity_spectrum, twisted_purity
from twistlab.errors import InvalidInputError
from twistlab.models import (
    apply_ladder_string,
    eigenstates,
    hubbard,
    hubbard_mode,
    operator_matrix,
    relative_energy_index,
    spectrum,
    sz_sector,
    syk,
    syk_couplings,
)


def free_ground_energy(sites, t):
    h = np.zeros((sites, sites))
    for x in range(sites):
        y = (x + 1) % sites
        h[x, y] -= t
        h[y, x] -= t
    eps = np.sort(np.linalg.eigvalsh(h))
    return min(eps[:up].sum() + eps[: sites - up].sum() for up in range(sites + 1))


def sector_matrix(full, l, n):
    idx = colex_states(l, n)
    return full[np.ix_(idx, idx)]


def test_mode_map():
    assert hubbard_mode(1, "up") == 1 and hubbard_mode(1, "down") == 2
    assert hubbard_mode(3, "up") == 5 and hubbard_mode(3, "down") == 6


@pytest.mark.parametrize("sites", [2, 3, 4, 5])
def test_hubbard_free_ground_energy(sites):
    H = hubbard(sites, 1.0, 0.0)
    assert abs(spectrum(H)[0] - free_ground_energy(sites, 1.0)) < 1e-10


def test_hubbard_two_site_doubled_bond():
    assert abs(spectrum(hubbard(2, 1.0, 0.0))[0] + 4) < 1e-12


def test_hubbard_atomic_limit():
    sites, U = 4, 2.5
    H = hubbard(sites, 0.0, U)
    counts = []
    for s in colex_states(2 * sites, sites):
        counts.append(sum(1 for x in range(sites) if (s >> 2 * x) & 3 == 3))
    assert np.allclose(spectrum(H), np.sort(U * np.array(counts)), atol=1e-12)


def test_hubbard_matches_jordan_wigner():
    sites, t, U = 3, 0.7, 1.3
    l = 2 * sites
    ann, cre = ladders(l)
    full = np.zeros((1 << l, 1 << l))
    for x in range(1, sites + 1):
        y = x % sites + 1
        for s in ("up", "down"):
            a, b = hubbard_mode(x, s), hubbard_mode(y, s)
            full -= t * (cre[a] @ ann[b] + cre[b] @ ann[a])
        u, d = hubbard_mode(x, "up"), hubbard_mode(x, "down")
        full += U * (cre[u] @ ann[u]) @ (cre[d] @ ann[d])
    assert np.allclose(hubbard(sites, t, U).matrix, sector_matrix(full, l, sites), atol=1e-12)


def test_syk_matches_jordan_wigner():
    l, n = 6, 3
    ann, cre = ladders(l)
    full = np.zeros((1 << l, 1 << l), dtype=complex)
    for (a, b, c, d), t in syk_couplings(l, 11).items():
        term = cre[a] @ cre[b] @ ann[c] @ ann[d]
        full += t * term + np.conj(t) * term.T
    H = syk(l, 11, n)
    assert np.allclose(H.matrix, sector_matrix(full, l, n), atol=1e-14)
    assert H.hermiticity_error() < 1e-12


def test_syk_determinism_and_order():
    a, b = syk(8, 5), syk(8, 5)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, syk(8, 6).matrix)
    keys = list(syk_couplings(6, 0))
    assert all(a > b > c > d for a, b, c, d in keys)
    assert len(keys) == 15


def test_syk_coupling_statistics():
    l = 8
    draws = np.concatenate([list(syk_couplings(l, seed).values()) for seed in range(150)])
    assert len(draws) >= 10_000
    target = (2 * l) ** -3.0
    assert abs(np.mean(np.abs(draws) ** 2) / target - 1) < 0.05
    assert abs(np.mean(draws**2)) / target < 0.05


def test_ladder_string_signs():
    states = np.array([0b011, 0b101, 0b110])
    valid, targets, signs = apply_ladder_string(states, [(3, True), (1, False)])
    assert valid.tolist() == [True, False, False]
    assert targets[0] == 0b110 and signs[0] == -1


def test_number_conservation_enforced():
    with pytest.raises(InvalidInputError):
        operator_matrix(4, 2, [(1.0, [(1, True)])])


def test_free_ground_state_is_slater():
    energy, v = eigenstates(hubbard(2, 1.0, 0.0))[0]
    assert abs(energy + 4) < 1e-12
    assert twisted_purity(v, 1) < 1e-10


def test_eigenstates_residual_and_order():
    H = hubbard(3, 1.0, 4.0)
    pairs = eigenstates(H, 5)
    energies = [e for e, _ in pairs]
    assert energies == sorted(energies)
    for e, v in pairs:
        assert np.linalg.norm(H.matrix @ v.amps - e * v.amps) < 1e-9 * np.linalg.norm(H.matrix, 2)
    with pytest.raises(InvalidInputError):
        eigenstates(H, indices=[H.dim])


def test_sz_restriction():
    H = hubbard(4, 1.0, 2.0)
    idx = sz_sector(H.basis, 0)
    assert len(idx) == 36
    e_full = eigenstates(H)[0][0]
    e_sz, v = eigenstates(H, sz2=0)[0]
    assert abs(e_full - e_sz) < 1e-10
    assert abs(v.norm - 1) < 1e-12


def test_relative_energy_index():
    evals = np.linspace(-1, 1, 11)
    assert relative_energy_index(evals, 0.23) == 2
    assert relative_energy_index(np.zeros(3), 0.5) == 0


def test_strong_coupling_shape():
    _, v = eigenstates(hubbard(4, 1.0, 50.0))[0]
    spec = purity_spectrum(v)
    assert spec[1] > 1.5 and spec[2] > spec[1]
