"""The map U -> polar((U^R)^Gamma) on U(d^2): seeds, iteration and batch search.

2-unitary matrices are period-3 points of the map.  Seeds near permutation
matrices that approximate an OLS are what make the d=6 search work.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .designs import BUILTIN_NAMES, builtin_design, permutation_from_design
from .metrics import gate_metrics
from .tensor_core import partial_transpose, reshuffle, unitarity_defect, write_dense_csv

__all__ = [
    "SingularInput",
    "UnknownPermutation",
    "SEED_KINDS",
    "OUTCOMES",
    "SeedSpec",
    "Trajectory",
    "polar_unitary",
    "map_step",
    "make_seed",
    "named_permutation",
    "iterate",
    "batch_run",
    "write_trajectory_csv",
]

log = logging.getLogger(__name__)

SEED_KINDS = ("haar", "permutation", "perturbed", "enphased")
OUTCOMES = ("TwoUnitary", "FixedPointA", "FixedPointAS", "Plateau", "MaxIter", "Singular")

# entangling power of the attracting fixed point reached from P36
EP_FIXED_A = Fraction(419, 420)


class SingularInput(ValueError):
    pass


class UnknownPermutation(KeyError):
    pass


def polar_unitary(A: np.ndarray, cutoff: float = 1e-12, allow_singular: bool = False) -> np.ndarray:
    """Unitary factor W of A = W H, the closest unitary to A in Frobenius norm.

    For singular A the factor is not unique; with ``allow_singular`` the
    null spaces are matched as LAPACK's SVD returns them.
    """
    u, s, vh = np.linalg.svd(A)
    if s[-1] <= cutoff and not allow_singular:
        raise SingularInput(f"smallest singular value {s[-1]:.3e} <= {cutoff:.0e}")
    return u @ vh


def map_step(U: np.ndarray, allow_singular: bool = False) -> np.ndarray:
    return polar_unitary(partial_transpose(reshuffle(U)), allow_singular=allow_singular)


def named_permutation(name: str) -> np.ndarray:
    if name not in BUILTIN_NAMES:
        raise UnknownPermutation(name)
    return permutation_from_design(builtin_design(name))


@dataclass(frozen=True)
class SeedSpec:
    kind: str = "haar"
    d: int = 3
    perm: str | None = None
    epsilon: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in SEED_KINDS:
            raise ValueError(f"unknown seed kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.kind != "haar":
            if self.perm not in BUILTIN_NAMES:
                raise UnknownPermutation(self.perm)
            d = builtin_design(self.perm).d
            if d != self.d:
                raise ValueError(f"{self.perm} lives in d={d}, spec says d={self.d}")


def _haar(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def make_seed(spec: SeedSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.rng_seed)
    n = spec.d**2
    if spec.kind == "haar":
        return _haar(n, rng)
    P = named_permutation(spec.perm).astype(complex)
    if spec.kind == "permutation":
        return P
    if spec.kind == "perturbed":
        M = rng.standard_normal((n, n))
        w, v = np.linalg.eigh((M + M.T) / 2)
        # exp(i eps H) = I + V (e^{i eps w} - 1) V^dagger, exactly I at eps = 0
        return P + P @ ((v * np.expm1(1j * spec.epsilon * w)) @ v.conj().T)
    phases = np.exp(2j * np.pi * rng.random(n))
    return P * phases  # P @ diag(phases)


@dataclass
class Trajectory:
    spec: SeedSpec | None
    points: list = field(default_factory=list)  # (n, e_p, g_t, delta)
    outcome: str = "MaxIter"
    final: np.ndarray | None = None
    converged_at: int | None = None
    error: str | None = None
    singular_steps: int = 0

    @property
    def deltas(self) -> np.ndarray:
        return np.array([p[3] for p in self.points])

    @property
    def final_delta(self) -> float:
        return self.points[-1][3] if self.points else float("nan")

    def decay_slope(self, window: int = 100) -> float:
        """Least-squares slope of log(delta) over the last ``window`` steps before convergence."""
        if self.converged_at is None:
            raise ValueError("trajectory did not converge")
        ns = np.array([p[0] for p in self.points])
        ds = self.deltas
        sel = ns < self.converged_at
        ns, ds = ns[sel][-window:], ds[sel][-window:]
        ok = ds > 0
        return float(np.polyfit(ns[ok], np.log(ds[ok]), 1)[0])


def _classify_plateau(history, ep: float) -> str:
    if abs(ep - float(EP_FIXED_A)) >= 1e-6:
        return "Plateau"
    # one period of the orbit: A itself has E(U) < E(US), its partners the opposite
    low = sum(1 for E_U, E_US in history[-3:] if E_U < E_US - 1e-9)
    return "FixedPointA" if low % 2 == 1 else "FixedPointAS"


def iterate(
    seed,
    tol: float = 1e-12,
    max_iter: int = 20000,
    window: int = 6,
    plateau_tol: float = 1e-14,
    refine: bool = True,
    refine_tol: float = 1e-12,
    refine_steps: int = 300,
    on_singular: str = "complete",
) -> Trajectory:
    """Iterate the map from a seed until it becomes 2-unitary, stalls, or runs out.

    ``seed`` is a :class:`SeedSpec` or an explicit unitary matrix.  After
    reaching ``delta < tol`` the iteration continues (``refine``) until the
    unitarity defects of U^R and U^Gamma drop below ``refine_tol``: delta is
    quadratic in those defects, so delta ~ 1e-12 leaves them near 1e-6.

    A rank-deficient polar input (the bare P36 seed hits one at the first
    step) is either completed (``on_singular="complete"``, counted in
    ``singular_steps``) or ends the run with outcome ``Singular`` (``"stop"``).
    """
    if on_singular not in ("complete", "stop"):
        raise ValueError(f"on_singular must be 'complete' or 'stop', got {on_singular!r}")
    if isinstance(seed, SeedSpec):
        spec, U = seed, make_seed(seed)
    else:
        spec, U = None, np.asarray(seed, dtype=complex)
    traj = Trajectory(spec=spec)
    entropies = []
    n = 0
    try:
        while n < max_iter:
            try:
                U = map_step(U)
            except SingularInput:
                if on_singular == "stop":
                    raise
                U = map_step(U, allow_singular=True)
                traj.singular_steps += 1
            n += 1
            m = gate_metrics(U)
            traj.points.append((n, m.e_p, m.g_t, m.delta))
            entropies.append((m.E_U, m.E_US))
            if m.delta < tol:
                traj.outcome, traj.converged_at = "TwoUnitary", n
                break
            if n > window and abs(m.delta - traj.points[-1 - window][3]) < plateau_tol:
                traj.outcome = _classify_plateau(entropies, m.e_p)
                if traj.outcome == "FixedPointA":
                    # land on the member of the period-3 orbit with E(U) < E(US)
                    for _ in range(2):
                        if m.E_U < m.E_US:
                            break
                        U = map_step(U)
                        n += 1
                        m = gate_metrics(U)
                        traj.points.append((n, m.e_p, m.g_t, m.delta))
                break
        if traj.outcome == "TwoUnitary" and refine:
            U, n = _refine(U, n, traj, refine_tol, refine_steps)
    except SingularInput as exc:
        traj.outcome, traj.error = "Singular", str(exc)
    traj.final = U
    return traj


def _refine(U, n, traj, refine_tol, steps):
    def err(X):
        return max(unitarity_defect(reshuffle(X)), unitarity_defect(partial_transpose(X)))

    def step(X, n):
        X = map_step(X)
        m = gate_metrics(X)
        traj.points.append((n + 1, m.e_p, m.g_t, m.delta))
        return X, n + 1

    # keep the same position on the period-3 orbit as the detected matrix;
    # defects are only comparable between iterates three steps apart
    while (n - traj.converged_at) % 3:
        U, n = step(U, n)
    best = err(U)
    for _ in range(steps // 3):
        if best <= refine_tol:
            break
        V, k = U, n
        for _ in range(3):
            V, k = step(V, k)
        e = err(V)
        if e >= best:
            del traj.points[len(traj.points) - 3 :]
            break
        U, n, best = V, k, e
    return U, n


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "e_p", "g_t", "delta"])
        for n, ep, gt, dl in traj.points:
            w.writerow([n, f"{ep:.17g}", f"{gt:.17g}", f"{dl:.17g}"])


def _run_one(args):
    spec, kw = args
    return iterate(spec, **kw)


def batch_run(specs, jobs: int = 1, out_dir=None, keep_trajectories: bool = True, **iterate_kw) -> dict:
    """Run :func:`iterate` for every spec and summarise the outcomes.

    Results are in input order regardless of ``jobs``; with ``out_dir`` each
    trial writes ``traj_XXXX.csv`` and converged trials ``unitary_XXXX.csv``.
    """
    specs = list(specs)
    work = [(s, iterate_kw) for s in specs]
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trajs = list(pool.map(_run_one, work))
    else:
        trajs = [_run_one(w) for w in work]
    counts = Counter(t.outcome for t in trajs)
    trials = []
    for idx, t in enumerate(trajs):
        trials.append(
            {
                "index": idx,
                "spec": asdict(t.spec) if t.spec else None,
                "outcome": t.outcome,
                "iterations": t.points[-1][0] if t.points else 0,
                "final_delta": t.final_delta,
                "final_e_p": t.points[-1][1] if t.points else None,
                "converged_at": t.converged_at,
                "error": t.error,
            }
        )
    deltas = [t.final_delta for t in trajs if t.points]
    summary = {
        "trials": len(trajs),
        "outcomes": {o: counts.get(o, 0) for o in OUTCOMES},
        "two_unitary_fraction": counts.get("TwoUnitary", 0) / len(trajs) if trajs else 0.0,
        "best_delta": min(deltas) if deltas else None,
        "per_trial": trials,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for idx, t in enumerate(trajs):
            write_trajectory_csv(t, out / f"traj_{idx:04d}.csv")
            if t.outcome == "TwoUnitary":
                write_dense_csv(t.final, out / f"unitary_{idx:04d}.csv")
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if keep_trajectories:
        summary["trajectories"] = trajs
    log.info("batch of %d: %s", len(trajs), dict(counts))
    return summary
