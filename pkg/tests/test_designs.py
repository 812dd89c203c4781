import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiunitary.ame import row_states
from multiunitary.designs import (
    BadSymbolRange,
    DesignTable,
    EvenDimension,
    ShapeMismatch,
    UnknownName,
    WrongDimension,
    builtin_design,
    check_ols,
    coarse_grain_check,
    format_design,
    is_latin_square,
    oqls_check,
    ols_modular,
    parse_design,
    permutation_from_design,
    read_design,
    write_design,
)
from multiunitary.metrics import two_unitarity_defect
from multiunitary.tensor_core import apply_local, from_tensor, partial_transpose, reshuffle, to_tensor

from conftest import P9_R_ROWS, bits, haar

# the d=3 card square, cards read as (rank, suit) with A,K,Q -> 1,2,3 and the
# three suits in the order of the label map
FIG2 = [[(2, 3), (3, 1), (1, 2)], [(3, 2), (1, 3), (2, 1)], [(1, 1), (2, 2), (3, 3)]]


def test_d3_card_square_is_ols():
    rep = check_ols(DesignTable.from_rows(FIG2))
    assert rep.is_ols and not rep.repeated_pairs and not rep.missing_pairs


def test_p36_defects():
    rep = check_ols(builtin_design("P36"))
    assert set(rep.repeated_pairs) == {(3, 3), (4, 4)}
    assert all(len(c) == 2 for c in rep.repeated_pairs.values())
    assert rep.repeat_count == len(rep.missing_pairs) == 2


def test_builtin_rows():
    P36, Ps = builtin_design("P36"), builtin_design("Ps")
    assert P36.grid[0] == tuple((k, k) for k in range(1, 7))
    assert [10 * k + l for k, l in Ps.grid[4]] == [64, 56, 26, 15, 43, 31]
    assert P36.grid[:4] == Ps.grid[:4] and P36.grid[4:] != Ps.grid[4:]
    with pytest.raises(UnknownName):
        builtin_design("P10")


def test_modular_d2_not_ols():
    with pytest.raises(EvenDimension):
        ols_modular(2)
    # the same (i+j, i+2j) rule at d=2 collapses the second component
    grid = [[((i + j) % 2 + 1, (i + 2 * j) % 2 + 1) for j in range(2)] for i in range(2)]
    assert not check_ols(DesignTable.from_rows(grid)).is_ols


@pytest.mark.parametrize("d", [3, 5, 7, 9])
def test_modular_is_ols(d):
    t = ols_modular(d)
    pairs = {p for row in t.grid for p in row}
    assert len(pairs) == d * d
    assert is_latin_square(t.component(0)) and is_latin_square(t.component(1))
    assert check_ols(t).is_ols


def test_modular_d3_tensor_and_lift(P9):
    t = ols_modular(3)
    T = np.zeros((3, 3, 3, 3))
    for i, j in itertools.product(range(3), repeat=2):
        k, l = t.grid[i][j]
        T[i, j, k - 1, l - 1] = 1
    # read through the tensor convention the modular table is exactly P_9
    assert np.array_equal(from_tensor(T), P9)
    # the block lift is the reshuffled matrix (both are 2-unitary)
    assert np.array_equal(permutation_from_design(t), bits(P9_R_ROWS))
    assert np.array_equal(permutation_from_design(builtin_design("P9")), P9)


def _strong_sudoku(P, d):
    locs = []
    for bi, bj in itertools.product(range(d), repeat=2):
        block = P[bi * d : (bi + 1) * d, bj * d : (bj + 1) * d]
        if block.sum() != 1:
            return False
        locs.append(tuple(np.argwhere(block)[0]))
    return len(set(locs)) == d * d


@pytest.mark.parametrize("d", [3, 5, 7])
def test_lift_of_ols_is_2_unitary_and_sudoku(d):
    P = permutation_from_design(ols_modular(d))
    for X in (P, reshuffle(P), partial_transpose(P)):
        assert np.array_equal(X.sum(0), np.ones(d * d)) and np.array_equal(X.sum(1), np.ones(d * d))
    assert _strong_sudoku(P, d)


def _random_latin(d, r):
    rows, cols, syms = r.sample(range(d), d), r.sample(range(d), d), r.sample(range(d), d)
    return [[syms[(rows[i] + cols[j]) % d] + 1 for j in range(d)] for i in range(d)]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 4, 5, 6]), st.randoms(use_true_random=False))
def test_lift_always_permutation(d, r):
    # any two Latin squares lift to a permutation, orthogonal or not
    A, B = _random_latin(d, r), _random_latin(d, r)
    t = DesignTable.from_rows([[(A[i][j], B[i][j]) for j in range(d)] for i in range(d)])
    P = permutation_from_design(t)
    assert np.array_equal(P, P.round())
    assert np.array_equal(P.sum(0), np.ones(d * d)) and np.array_equal(P.sum(1), np.ones(d * d))
    assert check_ols(t).repeat_count == len(check_ols(t).missing_pairs)


def test_bad_symbol_range():
    with pytest.raises(BadSymbolRange):
        check_ols(DesignTable.from_rows([[(1, 1), (2, 3)], [(2, 2), (1, 1)]]))


def test_design_file_roundtrip(tmp_path):
    t = builtin_design("Ps")
    path = tmp_path / "ps.txt"
    write_design(t, path)
    assert path.read_text().splitlines()[1] == "11 22 33 44 55 66"
    assert read_design(path) == t
    assert parse_design(format_design(t)) == t


def test_coarse_grain():
    # the P36 table is a blow-up of an OLS(3) under this grouping, so it passes;
    # the two rows in which Ps differs break the per-line counts
    P36 = to_tensor(permutation_from_design(builtin_design("P36")))
    assert coarse_grain_check(P36).passed
    rep = coarse_grain_check(to_tensor(permutation_from_design(builtin_design("Ps"))))
    assert not rep.passed and not rep.line_counts_ok and not rep.mixed_cells
    rep = coarse_grain_check(np.ones((6, 6, 6, 6)))
    assert not rep.passed
    with pytest.raises(WrongDimension):
        coarse_grain_check(np.ones((3, 3, 3, 3)))


def test_oqls_examples(P9, rng):
    assert oqls_check(row_states(P9)).passed
    # product states |i+j>|i+2j> of the d=3 OLS
    C = np.zeros((3, 3, 3, 3))
    for i, j in itertools.product(range(3), repeat=2):
        C[i, j, (i + j) % 3, (i + 2 * j) % 3] = 1
    assert oqls_check(C).passed
    bell = np.eye(3) / np.sqrt(3)
    rep = oqls_check(np.broadcast_to(bell, (3, 3, 3, 3)))
    assert not rep.passed and rep.failed == "a"
    with pytest.raises(ShapeMismatch):
        oqls_check(np.ones((3, 3, 2, 3)))


def test_oqls_matches_two_unitarity_under_local_rotations(P9, rng):
    for _ in range(20):
        V = apply_local(P9, *[haar(3, rng) for _ in range(4)])
        assert oqls_check(row_states(V), 1e-10).passed == (two_unitarity_defect(V) <= 1e-10)
        assert oqls_check(row_states(V), 1e-10).passed
    W = haar(9, rng)
    assert not oqls_check(row_states(W), 1e-10).passed
