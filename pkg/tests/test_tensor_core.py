import itertools

import numpy as np
import pytest

from multiunitary.tensor_core import (
    NonUnitaryFactor,
    apply_local,
    default_tol,
    flatten,
    from_tensor,
    is_unitary,
    local_dim,
    partial_transpose,
    read_dense_csv,
    reshuffle,
    swap,
    to_tensor,
    unitarity_defect,
    write_dense_csv,
)

from conftest import P9_G_ROWS, P9_R_ROWS, bits, haar


def _delta(a, b):
    return 1.0 if a == b else 0.0


def test_swap_reshuffle_is_swap_brute_force():
    d = 2
    S = swap(d)
    for i, j, k, l in itertools.product(range(d), repeat=4):
        assert S[i * d + j, k * d + l] == _delta(i, l) * _delta(j, k)
        # U^R_{ij,kl} = U_{ik,jl}
        assert reshuffle(S)[i * d + j, k * d + l] == S[i * d + k, j * d + l]
    assert np.array_equal(reshuffle(S), S)


def test_swap_partial_transpose_is_rank_one():
    d = 2
    G = partial_transpose(swap(d))
    for i, j, k, l in itertools.product(range(d), repeat=4):
        assert G[i * d + j, k * d + l] == _delta(i, j) * _delta(k, l)
    assert np.allclose(np.linalg.svd(G, compute_uv=False), [2, 0, 0, 0])
    assert not is_unitary(G)


def test_identity_reshuffle():
    R = reshuffle(np.eye(4))
    for i, j, k, l in itertools.product(range(2), repeat=4):
        assert R[i * 2 + j, k * 2 + l] == _delta(i, j) * _delta(k, l)
    assert np.linalg.matrix_rank(R) == 1
    assert np.isclose(np.linalg.norm(R), 2)


def test_p9_rearrangements_match_printed(P9):
    assert np.array_equal(reshuffle(P9), bits(P9_R_ROWS))
    assert np.array_equal(partial_transpose(P9), bits(P9_G_ROWS))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_involutions_and_norms(d, rng):
    U = rng.standard_normal((d * d, d * d)) + 1j * rng.standard_normal((d * d, d * d))
    assert np.array_equal(reshuffle(reshuffle(U)), U)
    assert np.array_equal(partial_transpose(partial_transpose(U)), U)
    assert np.isclose(np.linalg.norm(reshuffle(U)), np.linalg.norm(U))
    assert np.isclose(np.linalg.norm(partial_transpose(U)), np.linalg.norm(U))


@pytest.mark.parametrize("d", [2, 3])
def test_third_rearrangement_by_enumeration(d, rng):
    # (U^R)^Gamma_{ij,kl} = U^R_{il,kj} = U_{ik,lj}
    U = rng.standard_normal((d * d, d * d))
    RG = partial_transpose(reshuffle(U))
    for i, j, k, l in itertools.product(range(d), repeat=4):
        assert RG[i * d + j, k * d + l] == U[i * d + k, l * d + j]


def test_flatten_cuts(P9, rng):
    T = to_tensor(P9)
    assert np.array_equal(flatten(T, "AB|CD"), P9)
    assert np.array_equal(reshuffle(flatten(T, "AB|CD")), flatten(T, "AC|BD"))
    assert np.array_equal(flatten(T, "AD|BC"), partial_transpose(P9))
    for cut in ("AB|CD", "AC|BD", "AD|BC"):
        F = flatten(T, cut)
        assert np.array_equal(np.sort(F.sum(0)), np.ones(9)) and np.array_equal(F.sum(1), np.ones(9))
    X = rng.standard_normal((3, 3, 3, 3))
    assert np.isclose(np.linalg.norm(flatten(X, "AC|BD")), np.linalg.norm(X))
    with pytest.raises(ValueError):
        flatten(T, "AB|DC")


def test_tensor_roundtrip_and_dim(rng):
    U = haar(16, rng)
    assert local_dim(U) == 4
    assert np.array_equal(from_tensor(to_tensor(U)), U)
    with pytest.raises(ValueError):
        local_dim(np.eye(5))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_schmidt_sum_for_unitaries(d, rng):
    U = haar(d * d, rng)
    s = np.linalg.svd(reshuffle(U), compute_uv=False)
    assert np.isclose(np.sum(s**2), d * d)


def test_unitarity_defect_examples(P9, rng):
    assert unitarity_defect(P9) == 0
    assert unitarity_defect(2 * np.eye(4)) == pytest.approx(6.0)
    assert unitarity_defect(haar(36, rng)) <= 1e-12


def test_apply_local(P9, rng):
    I3 = np.eye(3)
    assert np.array_equal(apply_local(P9, I3, I3, I3, I3), P9)
    us = [haar(3, rng) for _ in range(4)]
    V = apply_local(P9, *us)
    assert unitarity_defect(V) < 1e-12
    with pytest.raises(NonUnitaryFactor):
        apply_local(P9, 2 * I3, I3, I3, I3)


def test_default_tol_env(monkeypatch):
    assert default_tol() == 1e-10
    monkeypatch.setenv("MULTIUNIT_TOL", "1e-6")
    assert default_tol() == 1e-6


def test_dense_csv_roundtrip(tmp_path, rng):
    U = haar(9, rng)
    path = tmp_path / "u.csv"
    write_dense_csv(U, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "d" and lines[1] == "3" and lines[2] == "p,s,re,im"
    assert np.array_equal(read_dense_csv(path), U)
