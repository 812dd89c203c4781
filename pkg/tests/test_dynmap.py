import json

import numpy as np
import pytest

from multiunitary.dynmap import (
    OUTCOMES,
    SeedSpec,
    SingularInput,
    UnknownPermutation,
    batch_run,
    iterate,
    make_seed,
    map_step,
    named_permutation,
    polar_unitary,
    write_trajectory_csv,
)
from multiunitary.metrics import gate_metrics, two_unitarity_defect
from multiunitary.tensor_core import partial_transpose, reshuffle, swap, unitarity_defect

from conftest import haar


def test_polar_examples(rng):
    U = haar(9, rng)
    assert np.allclose(polar_unitary(U), U, atol=1e-13)
    assert np.allclose(polar_unitary(2 * np.eye(4)), np.eye(4))
    with pytest.raises(SingularInput):
        polar_unitary(np.diag([3.0, 1e-20]))


def test_polar_is_nearest_unitary(rng):
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    W = polar_unitary(A)
    assert unitarity_defect(W) < 1e-12
    H = W.conj().T @ A
    assert np.allclose(H, H.conj().T) and np.all(np.linalg.eigvalsh((H + H.conj().T) / 2) > -1e-12)
    for _ in range(20):
        assert np.linalg.norm(A - W) <= np.linalg.norm(A - haar(6, rng)) + 1e-12


def test_map_step_on_p9(P9):
    U = P9.astype(complex)
    for _ in range(3):
        U = map_step(U)
        assert np.allclose(U, U.round()) and two_unitarity_defect(U) <= 1e-12
    assert np.allclose(U, P9)


def test_map_step_swap_singular():
    with pytest.raises(SingularInput):
        map_step(swap(2))
    t = iterate(swap(2), on_singular="stop")
    assert t.outcome == "Singular" and t.error


def test_map_step_output_unitary(rng):
    U = haar(16, rng)
    for _ in range(10):
        U = map_step(U)
        assert unitarity_defect(U) < 1e-11


def test_seeds():
    Ps = named_permutation("Ps")
    assert np.array_equal(make_seed(SeedSpec("perturbed", 6, "Ps", epsilon=0.0)), Ps)
    s = SeedSpec("haar", 4, rng_seed=9)
    assert unitarity_defect(make_seed(s)) <= 1e-12
    assert np.array_equal(make_seed(s), make_seed(s))
    for kind in ("perturbed", "enphased"):
        a = make_seed(SeedSpec(kind, 6, "Ps", rng_seed=3))
        assert np.array_equal(a, make_seed(SeedSpec(kind, 6, "Ps", rng_seed=3)))
        assert unitarity_defect(a) < 1e-12
    E = make_seed(SeedSpec("enphased", 6, "P36", rng_seed=1))
    assert np.allclose(np.abs(E), named_permutation("P36"))


def test_seed_validation():
    with pytest.raises(UnknownPermutation):
        SeedSpec("perturbed", 6, "P10")
    with pytest.raises(ValueError):
        SeedSpec("perturbed", 3, "Ps")
    with pytest.raises(ValueError):
        SeedSpec("gaussian", 3)
    with pytest.raises(UnknownPermutation):
        named_permutation("nope")


def test_haar_d3_converges_and_stays():
    t = iterate(SeedSpec("haar", 3, rng_seed=0), max_iter=2000)
    assert t.outcome == "TwoUnitary"
    assert t.final_delta < 1e-12
    assert all(0 - 1e-12 <= p[1] <= 1 + 1e-12 for p in t.points)
    U = t.final
    for _ in range(3):
        U = map_step(U)
        assert two_unitarity_defect(U) < 1e-11
    assert np.allclose(U, t.final, atol=1e-9)
    # refinement leaves the flattenings unitary, not merely delta small
    assert unitarity_defect(reshuffle(t.final)) < 1e-10
    assert unitarity_defect(partial_transpose(t.final)) < 1e-10


def test_p36_fixed_point_a():
    t = iterate(SeedSpec("permutation", 6, "P36"), max_iter=5000)
    assert t.outcome == "FixedPointA"
    assert t.singular_steps >= 1
    A = t.final
    m = gate_metrics(A)
    assert abs(m.e_p - 419 / 420) < 1e-6
    assert m.E_U < m.E_US
    assert unitarity_defect(partial_transpose(A)) < 1e-8
    assert unitarity_defect(reshuffle(A)) > 1e-3


def test_max_iter_and_trajectory_csv(tmp_path):
    t = iterate(SeedSpec("haar", 6, rng_seed=2), max_iter=5)
    assert t.outcome == "MaxIter" and len(t.points) == 5
    write_trajectory_csv(t, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "n,e_p,g_t,delta" and len(lines) == 6
    with pytest.raises(ValueError):
        t.decay_slope()


def test_batch_run(tmp_path):
    specs = [SeedSpec("haar", 3, rng_seed=k) for k in range(4)]
    s1 = batch_run(specs, out_dir=tmp_path / "a", max_iter=2000)
    batch_run(specs, out_dir=tmp_path / "b", max_iter=2000, jobs=2)
    assert set(s1["outcomes"]) == set(OUTCOMES) and s1["trials"] == 4
    assert len(s1["trajectories"]) == 4
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
    saved = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert saved["outcomes"]["TwoUnitary"] == len(list((tmp_path / "a").glob("unitary_*.csv")))


def test_batch_run_empty():
    s = batch_run([])
    assert s["trials"] == 0 and sum(s["outcomes"].values()) == 0 and s["best_delta"] is None
