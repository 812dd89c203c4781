"""Entanglement measures of bipartite gates computed from the operator Schmidt spectrum."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .tensor_core import default_tol, local_dim, reshuffle, swap, unitarity_defect

__all__ = [
    "GateMetrics",
    "NonUnitaryInput",
    "schmidt_spectrum",
    "operator_entanglement",
    "entangling_power",
    "gate_typicality",
    "two_unitarity_defect",
    "gate_metrics",
]


class NonUnitaryInput(UserWarning):
    pass


@dataclass(frozen=True)
class GateMetrics:
    lam: np.ndarray
    E_U: float
    E_US: float
    e_p: float
    g_t: float
    delta: float

    def as_dict(self, n_lambda: int = 8) -> dict:
        return {
            "e_p": self.e_p,
            "g_t": self.g_t,
            "E_U": self.E_U,
            "E_US": self.E_US,
            "delta": self.delta,
            "lambda": [float(x) for x in self.lam[:n_lambda]],
        }


def schmidt_spectrum(U: np.ndarray, check: bool = False) -> np.ndarray:
    """Squared singular values of U^R in descending order."""
    if check and unitarity_defect(U) > default_tol():
        warnings.warn("schmidt_spectrum: input is not unitary", NonUnitaryInput, stacklevel=2)
    s = np.linalg.svd(reshuffle(U), compute_uv=False)
    return s**2


def _linear_entropy(lam: np.ndarray, d: int) -> float:
    return float(1.0 - np.sum(lam**2) / d**4)


def operator_entanglement(U: np.ndarray) -> float:
    return _linear_entropy(schmidt_spectrum(U), local_dim(U))


def _entropies(U):
    d = local_dim(U)
    E_S = 1.0 - 1.0 / d**2
    return operator_entanglement(U), operator_entanglement(U @ swap(d)), E_S


def entangling_power(U: np.ndarray) -> float:
    E_U, E_US, E_S = _entropies(U)
    return (E_U + E_US - E_S) / E_S


def gate_typicality(U: np.ndarray) -> float:
    E_U, E_US, E_S = _entropies(U)
    return (E_U - E_US + E_S) / (2 * E_S)


def two_unitarity_defect(U: np.ndarray) -> float:
    """1 - e_p(U); vanishes exactly on 2-unitary matrices."""
    return 1.0 - entangling_power(U)


def gate_metrics(U: np.ndarray) -> GateMetrics:
    d = local_dim(U)
    lam = schmidt_spectrum(U)
    E_U = _linear_entropy(lam, d)
    E_US = operator_entanglement(U @ swap(d))
    E_S = 1.0 - 1.0 / d**2
    e_p = (E_U + E_US - E_S) / E_S
    g_t = (E_U - E_US + E_S) / (2 * E_S)
    return GateMetrics(lam=lam, E_U=E_U, E_US=E_US, e_p=e_p, g_t=g_t, delta=1.0 - e_p)
