"""Local-unitary canonicalisation of numerically found 2-unitary matrices.

A 2-unitary U stays 2-unitary under U -> (uA x uB) U (uC x uD).  The map
search returns matrices with full support; this module searches the local
orbit for a representative whose tensor support fits a coarse-grained
design (by default the order-6 one with nine 4x4 blocks), then snaps the
residual entries to zero and re-converges with the map inside the pattern.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .designs import coarse_support_mask
from .dynmap import map_step
from .metrics import two_unitarity_defect
from .tensor_core import local_dim, partial_transpose, reshuffle, unitarity_defect

__all__ = ["PolishResult", "hermitian", "local_unitary", "leakage", "concentration", "polish"]

log = logging.getLogger(__name__)


def hermitian(x: np.ndarray, d: int) -> np.ndarray:
    """Hermitian d x d matrix from d*d reals: diagonal, then upper real parts, then upper imaginary parts."""
    H = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    H[np.diag_indices(d)] = x[:d]
    H[iu] = x[d : d + m] + 1j * x[d + m : d + 2 * m]
    H[(iu[1], iu[0])] = np.conj(H[iu])
    return H


def _expih(x, d):
    lam, V = np.linalg.eigh(hermitian(x, d))
    e = np.exp(1j * lam)
    return (V * e) @ V.conj().T, lam, V, e


def local_unitary(x: np.ndarray, d: int) -> np.ndarray:
    return _expih(x, d)[0]


def _grad_h(Mbar, lam, V, e, d):
    """d f / d x for u = exp(iH(x)) given df = 2 Re <Mbar, du>."""
    dl = lam[:, None] - lam[None, :]
    de = e[:, None] - e[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(np.abs(dl) > 1e-12, de / np.where(dl == 0, 1, dl), 1j * e[:, None])
    N = V.conj().T @ Mbar @ V
    Z = V @ (N * np.conj(phi)) @ V.conj().T
    iu = np.triu_indices(d, 1)
    g_diag = 2 * Z.real.diagonal()
    g_re = 2 * (Z[iu] + Z[(iu[1], iu[0])]).real
    g_im = 2 * (Z[iu].imag - Z[(iu[1], iu[0])].imag)
    return np.concatenate([g_diag, g_re, g_im])


def _local_grads(G, U, us, d):
    """Wirtinger-type gradients of f(V), V = (A x B) U (C x D), given G = df/dconj(V)."""
    A, B, C, D = us
    KL, KR = np.kron(A, B), np.kron(C, D)
    Q = (G @ (U @ KR).conj().T).reshape(d, d, d, d)
    Qr = ((KL @ U).conj().T @ G).reshape(d, d, d, d)
    return [
        np.einsum("abcd,bd->ac", Q, B.conj()),
        np.einsum("abcd,ac->bd", Q, A.conj()),
        np.einsum("abcd,bd->ac", Qr, D.conj()),
        np.einsum("abcd,ac->bd", Qr, C.conj()),
    ]


def _apply(U, us):
    A, B, C, D = us
    return np.kron(A, B) @ U @ np.kron(C, D)


def leakage(V: np.ndarray, mask: np.ndarray) -> float:
    """Squared weight of V outside the allowed tensor support."""
    return float(np.sum(np.abs(V[~mask.reshape(V.shape)]) ** 2))


def concentration(V: np.ndarray) -> float:
    """sum |V|^4 over U, U^R and U^Gamma."""
    return float(sum(np.sum(np.abs(X) ** 4) for X in (V, reshuffle(V), partial_transpose(V))))


def _objective(U, d, kind, outside):
    def f(x):
        parts = [_expih(x[n * d * d : (n + 1) * d * d], d) for n in range(4)]
        us = [p[0] for p in parts]
        V = _apply(U, us)
        if kind == "leakage":
            val = float(np.sum(outside * np.abs(V) ** 2))
            G = outside * V
        else:
            # maximise the quartic concentration; rearrangements permute entries
            T = V.reshape(d, d, d, d)
            G4 = 2 * np.abs(T) ** 2 * T
            val = -concentration(V)
            # each rearrangement permutes the same entries, so the three terms agree
            G = -3 * G4.reshape(d * d, d * d)
        Ms = _local_grads(G, U, us, d)
        grad = np.concatenate([_grad_h(M, p[1], p[2], p[3], d) for M, p in zip(Ms, parts)])
        return val, grad

    return f


@dataclass
class PolishResult:
    matrix: np.ndarray
    factors: tuple
    leakage: float
    restarts: int
    success: bool
    delta: float
    defects: tuple


def _defects(V):
    return max(unitarity_defect(reshuffle(V)), unitarity_defect(partial_transpose(V)))


def _reconverge(V, mask, tol=1e-13, max_rounds=2000, patience=20):
    """Zero the entries outside the pattern, then iterate the map in multiples of three.

    The pattern is a union of blocks in all three flattenings, so the polar
    projections keep it.
    """
    inside = mask.reshape(V.shape)
    W = np.where(inside, V, 0)
    best, best_W, stale = _defects(W), W, 0
    for _ in range(max_rounds):
        if best <= tol or stale >= patience:
            break
        W = np.where(inside, map_step(map_step(map_step(W))), 0)
        e = _defects(W)
        if e < best:
            best, best_W, stale = e, W, 0
        else:
            stale += 1
    return best_W


def polish(
    U: np.ndarray,
    mask: np.ndarray | None = None,
    objective: str = "leakage",
    restarts: int = 60,
    rng=None,
    scale: float = 3.0,
    target: float = 1e-9,
    maxiter: int = 5000,
) -> PolishResult:
    """Search U(d)^4 for a local transform of U whose support fits ``mask``.

    ``objective="leakage"`` minimises the weight outside ``mask`` (default:
    the coarse-grained order-6 design) from ``restarts`` random starts;
    ``objective="concentration"`` maximises sum |V|^4 over the three
    flattenings instead and does not snap to a pattern.
    """
    U = np.asarray(U, dtype=complex)
    d = local_dim(U)
    if mask is None:
        mask = coarse_support_mask()
    mask = np.asarray(mask, dtype=bool)
    if objective not in ("leakage", "concentration"):
        raise ValueError(f"unknown objective {objective!r}")
    rng = np.random.default_rng(rng)
    outside = (~mask).reshape(d * d, d * d).astype(float)
    f = _objective(U, d, objective, outside)
    best = None
    for r in range(1, restarts + 1):
        x0 = rng.standard_normal(4 * d * d) * scale
        res = minimize(f, x0, jac=True, method="L-BFGS-B",
                       options={"maxiter": maxiter, "ftol": 1e-16, "gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
        log.debug("polish restart %d: objective %.3e", r, res.fun)
        if objective == "leakage" and res.fun < target:
            break
    us = tuple(local_unitary(best.x[n * d * d : (n + 1) * d * d], d) for n in range(4))
    V = _apply(U, us)
    ok = objective == "leakage" and best.fun < target
    if ok:
        V = _reconverge(V, mask)
    return PolishResult(
        matrix=V,
        factors=us,
        leakage=leakage(V, mask),
        restarts=r,
        success=ok,
        delta=two_unitarity_defect(V),
        defects=(unitarity_defect(V), unitarity_defect(reshuffle(V)), unitarity_defect(partial_transpose(V))),
    )
