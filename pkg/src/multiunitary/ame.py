"""Four-party states built from bipartite unitaries and their AME checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .metrics import NonUnitaryInput
from .tensor_core import default_tol, local_dim, to_tensor, unitarity_defect

__all__ = [
    "BadSubset",
    "ReductionReport",
    "BlockReport",
    "state_from_unitary",
    "partial_trace",
    "ame_check",
    "row_states",
    "bell_rank_check",
    "block_structure_detect",
]

PARTIES = "ABCD"


class BadSubset(ValueError):
    pass


def state_from_unitary(U: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Amplitudes T[i,j,k,l] / d of the four-party state, T[i,j,k,l] = U[(i,j),(k,l)]."""
    tol = default_tol() if tol is None else tol
    defect = unitarity_defect(U)
    if defect > tol:
        raise NonUnitaryInput(f"unitarity defect {defect:.3e} exceeds {tol:.1e}")
    d = local_dim(U)
    return to_tensor(U).astype(complex) / d


def _as_state(psi) -> np.ndarray:
    psi = np.asarray(psi)
    if psi.ndim == 1:
        d = round(len(psi) ** 0.25)
        psi = psi.reshape(d, d, d, d)
    return psi


def partial_trace(psi, keep: str) -> np.ndarray:
    """Reduced density matrix on the parties in ``keep`` (a string over 'ABCD')."""
    psi = _as_state(psi)
    keep = "".join(sorted(set(keep.upper())))
    if not keep or len(keep) > 3 or any(p not in PARTIES for p in keep):
        raise BadSubset(f"keep must be 1-3 of {PARTIES}, got {keep!r}")
    d = psi.shape[0]
    kept = [PARTIES.index(p) for p in keep]
    traced = [n for n in range(4) if n not in kept]
    m = psi.transpose(kept + traced).reshape(d ** len(kept), -1)
    return m @ m.conj().T


@dataclass
class ReductionReport:
    deviations: dict  # "AB"/"AC"/"AD" -> ||rho - I/d^2||_F
    passed: bool


def ame_check(psi, tol: float | None = None) -> ReductionReport:
    """Compare the three independent two-party reductions with I/d^2.

    Purity makes each complementary reduction isospectral, so AB, AC and AD
    cover all 2|2 cuts; 1|3 cuts follow from them.
    """
    tol = default_tol() if tol is None else tol
    psi = _as_state(psi)
    d = psi.shape[0]
    target = np.eye(d * d) / d**2
    devs = {cut: float(np.linalg.norm(partial_trace(psi, cut) - target)) for cut in ("AB", "AC", "AD")}
    return ReductionReport(deviations=devs, passed=all(v <= tol for v in devs.values()))


def row_states(U: np.ndarray) -> np.ndarray:
    """C[i, j] = coefficient matrix of the row state |psi_ij> (row (i,j) of U)."""
    return to_tensor(np.asarray(U)).copy()


def bell_rank_check(C, tol: float = 1e-10) -> bool:
    """True iff C has singular values (1/sqrt2, 1/sqrt2, 0, ...)."""
    s = np.linalg.svd(np.asarray(C), compute_uv=False)
    want = np.zeros_like(s)
    want[:2] = 2**-0.5
    return bool(np.max(np.abs(s - want)) <= tol)


@dataclass
class BlockReport:
    blocks: list  # [(rows, cols), ...] zero-based index lists
    sizes: list  # [(n_rows, n_cols), ...]
    defects: list  # unitarity defect of each extracted square block (nan if not square)


def block_structure_detect(U: np.ndarray, tol: float = 1e-9) -> BlockReport:
    """Connected components of the bipartite row/column support graph of U."""
    U = np.asarray(U)
    n, m = U.shape
    A = csr_matrix(np.abs(U) > tol)
    graph = csr_matrix(
        np.block([[np.zeros((n, n)), A.toarray()], [A.toarray().T, np.zeros((m, m))]])
    )
    _, labels = connected_components(graph, directed=False)
    blocks, sizes, defects = [], [], []
    for lab in sorted(set(labels), key=lambda x: np.argmax(labels == x)):
        idx = np.nonzero(labels == lab)[0]
        rows = [int(x) for x in idx if x < n]
        cols = [int(x) - n for x in idx if x >= n]
        blocks.append((rows, cols))
        sizes.append((len(rows), len(cols)))
        if rows and len(rows) == len(cols):
            defects.append(unitarity_defect(U[np.ix_(rows, cols)]))
        else:
            defects.append(float("nan"))
    return BlockReport(blocks=blocks, sizes=sizes, defects=defects)
