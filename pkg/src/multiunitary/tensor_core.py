"""Bipartite operators of order d**2 and their index rearrangements.

A matrix ``U`` of order ``d**2`` is read in the product basis as
``U[(i, j), (k, l)]`` with row ``p = i*d + j`` and column ``s = k*d + l``
(zero-based; the one-based form is ``p = j + d*(i-1)``).  Every module in
this package goes through :func:`to_tensor` / :func:`from_tensor` so that
the convention lives in one place.
"""

from __future__ import annotations

import csv
import math
import os
from pathlib import Path

import numpy as np

__all__ = [
    "NonUnitaryFactor",
    "default_tol",
    "local_dim",
    "to_tensor",
    "from_tensor",
    "reshuffle",
    "partial_transpose",
    "flatten",
    "swap",
    "unitarity_defect",
    "is_unitary",
    "apply_local",
    "read_dense_csv",
    "write_dense_csv",
]

CUTS = ("AB|CD", "AC|BD", "AD|BC")


class NonUnitaryFactor(ValueError):
    pass


def default_tol() -> float:
    """Unitarity tolerance, overridable through ``MULTIUNIT_TOL``."""
    return float(os.environ.get("MULTIUNIT_TOL", "1e-10"))


def local_dim(U: np.ndarray) -> int:
    n, m = U.shape
    d = math.isqrt(n)
    if n != m or d * d != n:
        raise ValueError(f"expected a square matrix of order d**2, got {U.shape}")
    return d


def to_tensor(U: np.ndarray) -> np.ndarray:
    d = local_dim(U)
    return np.asarray(U).reshape(d, d, d, d)


def from_tensor(T: np.ndarray) -> np.ndarray:
    d = T.shape[0]
    if T.shape != (d, d, d, d):
        raise ValueError(f"expected a (d, d, d, d) tensor, got {T.shape}")
    return T.reshape(d * d, d * d)


def reshuffle(U: np.ndarray) -> np.ndarray:
    """U^R with U^R[(i,j),(k,l)] = U[(i,k),(j,l)]."""
    return from_tensor(to_tensor(U).transpose(0, 2, 1, 3)).copy()


def partial_transpose(U: np.ndarray) -> np.ndarray:
    """U^Gamma with U^Gamma[(i,j),(k,l)] = U[(i,l),(k,j)]."""
    return from_tensor(to_tensor(U).transpose(0, 3, 2, 1)).copy()


def flatten(T: np.ndarray, cut: str = "AB|CD") -> np.ndarray:
    """Matrix of ``T[i,j,k,l]`` for one of the three pairings of its indices.

    ``AB|CD`` is U itself, ``AC|BD`` is U^R and ``AD|BC`` is U^Gamma.
    """
    U = from_tensor(np.asarray(T))
    if cut == "AB|CD":
        return U.copy()
    if cut == "AC|BD":
        return reshuffle(U)
    if cut == "AD|BC":
        return partial_transpose(U)
    raise ValueError(f"unknown cut {cut!r}; expected one of {CUTS}")


def swap(d: int) -> np.ndarray:
    S = np.zeros((d, d, d, d))
    for i in range(d):
        for j in range(d):
            S[i, j, j, i] = 1.0
    return S.reshape(d * d, d * d)


def unitarity_defect(U: np.ndarray) -> float:
    """Frobenius norm of U^dagger U - I."""
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[1])))


def is_unitary(U: np.ndarray, tol: float | None = None) -> bool:
    return unitarity_defect(U) <= (default_tol() if tol is None else tol)


def apply_local(U, uA, uB, uC, uD, tol: float | None = None) -> np.ndarray:
    """(uA x uB) U (uC x uD); every factor must be unitary."""
    tol = default_tol() if tol is None else tol
    for name, u in zip("ABCD", (uA, uB, uC, uD)):
        defect = unitarity_defect(u)
        if defect > tol:
            raise NonUnitaryFactor(f"factor u{name} has unitarity defect {defect:.3e}")
    return np.kron(uA, uB) @ U @ np.kron(uC, uD)


def write_dense_csv(U: np.ndarray, path) -> None:
    """Write nonzero entries as ``p,s,re,im`` rows (1-based) after a ``d`` header."""
    U = np.asarray(U, dtype=complex)
    d = local_dim(U)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d"])
        w.writerow([d])
        w.writerow(["p", "s", "re", "im"])
        for p, s in zip(*np.nonzero(U)):
            z = U[p, s]
            w.writerow([p + 1, s + 1, f"{z.real:.17g}", f"{z.imag:.17g}"])


def read_dense_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0] != ["d"]:
        raise ValueError(f"{path}: missing 'd' header")
    d = int(rows[1][0])
    if rows[2] != ["p", "s", "re", "im"]:
        raise ValueError(f"{path}: missing 'p,s,re,im' header")
    U = np.zeros((d * d, d * d), dtype=complex)
    for p, s, re, im in rows[3:]:
        U[int(p) - 1, int(s) - 1] = complex(float(re), float(im))
    if not np.all(np.isfinite(U)):
        raise ValueError(f"{path}: non-finite entries")
    return U
