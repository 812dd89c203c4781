import itertools

import numpy as np
import pytest

from multiunitary.ame import (
    BadSubset,
    ame_check,
    bell_rank_check,
    block_structure_detect,
    partial_trace,
    row_states,
    state_from_unitary,
)
from multiunitary.designs import builtin_design, oqls_check, permutation_from_design
from multiunitary.dynmap import SeedSpec, iterate
from multiunitary.metrics import NonUnitaryInput, two_unitarity_defect
from multiunitary.tensor_core import apply_local, partial_transpose, reshuffle

from conftest import haar


def test_p9_state_matches_formula(P9):
    psi = state_from_unitary(P9)
    assert np.count_nonzero(psi) == 9 and np.allclose(psi[psi != 0], 1 / 3)
    for i, j in itertools.product(range(3), repeat=2):
        # P9 is the lift of |i>|j>|i+j>|i+2j> with labels 1..3 taken mod 3
        k, l = (i + j + 1) % 3, (i + 2 * j + 2) % 3
        assert psi[i, j, k, l] == pytest.approx(1 / 3)


def test_identity_state_not_ame():
    psi = state_from_unitary(np.eye(4))
    for i, j in itertools.product(range(2), repeat=2):
        assert psi[i, j, i, j] == pytest.approx(0.5)
    rep = ame_check(psi, 1e-9)
    assert not rep.passed and rep.deviations["AC"] > 0.5 and rep.deviations["AB"] < 1e-12


def test_reductions(P9, rng):
    U = haar(16, rng)
    assert np.allclose(partial_trace(state_from_unitary(U), "AB"), np.eye(16) / 16, atol=1e-12)
    assert np.allclose(partial_trace(state_from_unitary(P9), "AC"), np.eye(9) / 9)
    ghz = np.zeros((3,) * 4)
    for k in range(3):
        ghz[k, k, k, k] = 1 / np.sqrt(3)
    assert np.allclose(partial_trace(ghz, "A"), np.eye(3) / 3)
    with pytest.raises(BadSubset):
        partial_trace(ghz, "AE")
    with pytest.raises(NonUnitaryInput):
        state_from_unitary(2 * np.eye(4), tol=1e-10)


def test_purity_complement(rng):
    psi = rng.standard_normal((3,) * 4) + 1j * rng.standard_normal((3,) * 4)
    psi /= np.linalg.norm(psi)
    for keep, rest in (("AB", "CD"), ("AC", "BD"), ("AD", "BC")):
        a = np.sort(np.linalg.eigvalsh(partial_trace(psi, keep)))
        b = np.sort(np.linalg.eigvalsh(partial_trace(psi, rest)))
        assert np.allclose(a, b, atol=1e-10)


def test_bell_rank():
    assert bell_rank_check(np.eye(2) / np.sqrt(2))
    C = np.zeros((6, 6))
    C[0, 0] = 1
    assert not bell_rank_check(C)
    C = np.zeros((6, 6))
    C[0, 1] = C[1, 0] = 1 / np.sqrt(2)
    assert bell_rank_check(C)


def test_blocks(P9, rng):
    rep = block_structure_detect(P9)
    assert rep.sizes == [(1, 1)] * 9
    assert block_structure_detect(haar(36, rng)).sizes == [(36, 36)]


def test_row_states_of_p9_are_elementary(P9):
    C = row_states(P9)
    for i, j in itertools.product(range(3), repeat=2):
        assert C[i, j].sum() == 1 and np.count_nonzero(C[i, j]) == 1


def test_equivalence_chain(P9, rng):
    d3 = iterate(SeedSpec("haar", 3, rng_seed=4), max_iter=2000).final
    P36 = permutation_from_design(builtin_design("P36"))
    local = apply_local(P9, *[haar(3, rng) for _ in range(4)])
    for U, expected in ((P9, True), (local, True), (d3, True), (P36, False), (haar(9, rng), False)):
        a = ame_check(state_from_unitary(U), 1e-9).passed
        b = two_unitarity_defect(U) <= 1e-12
        c = oqls_check(row_states(U), 1e-9).passed
        assert a == b == c == expected
    # U^R and U^Gamma of a 2-unitary are 2-unitary
    assert two_unitarity_defect(reshuffle(d3)) < 1e-12
    assert two_unitarity_defect(partial_transpose(d3)) < 1e-12
