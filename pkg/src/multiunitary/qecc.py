"""Error-detecting codes from perfect tensors.

Shortening the pure ((4,1,3))_d code of an AME(4,d) state gives the
((3,d,2))_d encoder |i> -> d^{-1/2} sum_{jkl} T[i,j,k,l] |j,k,l>.
Errors are Weyl-Heisenberg operators X^alpha Z^beta on each site with
X|k> = |k-1> and Z|k> = eta^k |k>, so that X Z = eta Z X.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .metrics import two_unitarity_defect
from .tensor_core import from_tensor

__all__ = [
    "NotTwoUnitary",
    "ErrorOperator",
    "CodeSpace",
    "shift",
    "clock",
    "weyl_basis",
    "encode",
    "make_code",
    "kl_check",
    "pure_code_check",
]


class NotTwoUnitary(ValueError):
    pass


def shift(d: int) -> np.ndarray:
    return np.roll(np.eye(d), -1, axis=0)


def clock(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


@dataclass(frozen=True)
class ErrorOperator:
    d: int
    powers: tuple  # one (alpha, beta) per site

    @property
    def weight(self) -> int:
        return sum(1 for a, b in self.powers if (a % self.d, b % self.d) != (0, 0))

    @property
    def sites(self) -> tuple:
        return tuple(n for n, (a, b) in enumerate(self.powers) if (a % self.d, b % self.d) != (0, 0))

    def local(self, n: int) -> np.ndarray:
        a, b = self.powers[n]
        return np.linalg.matrix_power(shift(self.d), a % self.d) @ np.linalg.matrix_power(clock(self.d), b % self.d)

    def matrix(self) -> np.ndarray:
        out = np.eye(1)
        for n in range(len(self.powers)):
            out = np.kron(out, self.local(n))
        return out

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """E|psi> for psi of shape (d,)*n_sites or flat, without forming E."""
        d, n = self.d, len(self.powers)
        flat = psi.ndim == 1
        out = psi.reshape((d,) * n)
        eta = np.exp(2j * np.pi * np.arange(d) / d)
        for site, (a, b) in enumerate(self.powers):
            if b % d:
                shape = [1] * n
                shape[site] = d
                out = out * (eta ** (b % d)).reshape(shape)
            if a % d:
                # X^a |k> = |k - a>
                out = np.roll(out, -(a % d), axis=site)
        return out.reshape(-1) if flat else out


def weyl_basis(d: int, weight: int, sites: int, on=None) -> list:
    """All X^a Z^b products on ``sites`` sites acting nontrivially on exactly ``weight`` of them.

    ``on`` restricts the support to the listed site subsets.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    labels = [(a, b) for a in range(d) for b in range(d) if (a, b) != (0, 0)]
    subsets = on if on is not None else list(combinations(range(sites), weight))
    ops = []
    for supp in subsets:
        for choice in product(labels, repeat=len(supp)):
            powers = [(0, 0)] * sites
            for s, lab in zip(supp, choice):
                powers[s] = lab
            ops.append(ErrorOperator(d, tuple(powers)))
    return ops


@dataclass
class CodeSpace:
    d: int
    codewords: np.ndarray  # (d, d**3), row i is |i~>

    def gram(self) -> np.ndarray:
        return self.codewords.conj() @ self.codewords.T


def _tensor(T):
    T = np.asarray(T)
    if T.ndim == 2:
        d = round(T.shape[0] ** 0.5)
        T = T.reshape(d, d, d, d)
    return T


def _require_two_unitary(T, tol):
    delta = two_unitarity_defect(from_tensor(T))
    if delta > tol:
        raise NotTwoUnitary(f"1 - e_p = {delta:.3e} exceeds {tol:.0e}")


def encode(i, T, check: bool = True, tol: float = 1e-9) -> np.ndarray:
    """Encoded vector for basis state ``i`` (1-based) or for a coefficient vector ``i``."""
    T = _tensor(T)
    d = T.shape[0]
    if check:
        _require_two_unitary(T, tol)
    words = T.reshape(d, d**3) / np.sqrt(d)
    if np.ndim(i) == 0:
        if not 1 <= int(i) <= d:
            raise ValueError(f"basis index {i} outside 1..{d}")
        return words[int(i) - 1].copy()
    return np.asarray(i) @ words


def make_code(T, check: bool = True, tol: float = 1e-9) -> CodeSpace:
    T = _tensor(T)
    d = T.shape[0]
    return CodeSpace(d, np.array([encode(i, T, check=check, tol=tol) for i in range(1, d + 1)]))


@dataclass
class KLReport:
    passed: bool
    n_errors: int
    failures: list  # (error powers, off-diagonal max, diagonal spread)
    worst_offdiag: float
    worst_spread: float


def kl_check(code: CodeSpace, errors, tol: float = 1e-9) -> KLReport:
    """Detection test: <i~|E|j~> = c_E delta_ij for every listed error."""
    d = code.d
    words = code.codewords
    failures, w_off, w_spread = [], 0.0, 0.0
    n = 0
    for E in errors:
        n += 1
        G = words.conj() @ np.array([E.apply(w) for w in words]).T
        diag = np.diag(G)
        off = float(np.max(np.abs(G - np.diag(diag)))) if d > 1 else 0.0
        spread = float(np.max(np.abs(diag - diag.mean())))
        w_off, w_spread = max(w_off, off), max(w_spread, spread)
        if off > tol or spread > tol:
            failures.append((E.powers, off, spread))
    return KLReport(not failures, n, failures, w_off, w_spread)


@dataclass
class PureReport:
    passed: bool
    n_errors: int
    worst: float
    failures: list


def pure_code_check(psi, max_weight: int = 2, tol: float = 1e-9, all_pairs: bool = False) -> PureReport:
    """<Psi|E|Psi> = 0 for every Weyl error E != I of weight <= max_weight.

    Weight-2 errors are checked on the pairs AB, AC, AD only: for a pure
    state the complementary pair carries the same reduced spectrum.  Pass
    ``all_pairs=True`` to include BC, BD and CD too.
    """
    psi = np.asarray(psi)
    if psi.ndim == 1:
        d = round(len(psi) ** 0.25)
        psi = psi.reshape(d, d, d, d)
    d = psi.shape[0]
    errors = weyl_basis(d, 1, 4)
    if max_weight >= 2:
        pairs = list(combinations(range(4), 2)) if all_pairs else [(0, 1), (0, 2), (0, 3)]
        errors += weyl_basis(d, 2, 4, on=pairs)
    worst, failures = 0.0, []
    for E in errors:
        v = abs(np.vdot(psi, E.apply(psi)))
        worst = max(worst, v)
        if v > tol:
            failures.append((E.powers, v))
    return PureReport(not failures, len(errors), worst, failures)
