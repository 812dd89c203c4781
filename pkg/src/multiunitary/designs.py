"""Latin squares, Graeco-Latin tables and their lift to permutation matrices.

Symbols are 1-based everywhere.  A :class:`DesignTable` holds a pair
``(k, l)`` in every cell ``(i, j)``; it need not be orthogonal, since the
near-OLS tables are the seeds of the search.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensor_core import default_tol, to_tensor

__all__ = [
    "BadSymbolRange",
    "EvenDimension",
    "UnknownName",
    "WrongDimension",
    "ShapeMismatch",
    "DesignTable",
    "OlsDefectReport",
    "CoarseGrainReport",
    "OqlsReport",
    "is_latin_square",
    "check_ols",
    "ols_modular",
    "permutation_from_design",
    "builtin_design",
    "BUILTIN_NAMES",
    "coarse_grain_check",
    "oqls_check",
    "read_design",
    "write_design",
    "format_design",
    "parse_design",
    "FIG5_COARSE_OLS",
    "coarse_support_mask",
]


class BadSymbolRange(ValueError):
    pass


class EvenDimension(ValueError):
    pass


class UnknownName(KeyError):
    pass


class WrongDimension(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DesignTable:
    d: int
    grid: tuple  # grid[i][j] == (k, l)

    @classmethod
    def from_rows(cls, rows) -> "DesignTable":
        grid = tuple(tuple((int(k), int(l)) for k, l in row) for row in rows)
        return cls(len(grid), grid)

    def component(self, which: int) -> np.ndarray:
        """The first (0) or second (1) symbol square as an integer array."""
        return np.array([[cell[which] for cell in row] for row in self.grid])


@dataclass
class OlsDefectReport:
    repeated_pairs: dict = field(default_factory=dict)  # (k, l) -> [(i, j), ...]
    missing_pairs: list = field(default_factory=list)
    row_conflicts: dict = field(default_factory=dict)  # component -> [(row, symbol), ...]
    column_conflicts: dict = field(default_factory=dict)

    @property
    def repeat_count(self) -> int:
        return sum(len(cells) - 1 for cells in self.repeated_pairs.values())

    @property
    def is_ols(self) -> bool:
        return not (
            self.repeated_pairs
            or self.missing_pairs
            or any(self.row_conflicts.values())
            or any(self.column_conflicts.values())
        )


def _check_range(t: DesignTable) -> None:
    if len(t.grid) != t.d or any(len(row) != t.d for row in t.grid):
        raise BadSymbolRange(f"grid is not {t.d}x{t.d}")
    for i, row in enumerate(t.grid, 1):
        for j, (k, l) in enumerate(row, 1):
            if not (1 <= k <= t.d and 1 <= l <= t.d):
                raise BadSymbolRange(f"cell ({i},{j}) holds ({k},{l}) outside 1..{t.d}")


def is_latin_square(square) -> bool:
    a = np.asarray(square)
    d = a.shape[0]
    want = set(range(1, d + 1))
    return all(set(a[r]) == want for r in range(d)) and all(set(a[:, c]) == want for c in range(d))


def _conflicts(a: np.ndarray, axis: int) -> list:
    out = []
    lines = a if axis == 0 else a.T
    for n, line in enumerate(lines, 1):
        for sym, cnt in sorted(Counter(line.tolist()).items()):
            if cnt > 1:
                out.append((n, sym))
    return out


def check_ols(t: DesignTable) -> OlsDefectReport:
    """Enumerate every way in which ``t`` fails to be a Graeco-Latin square."""
    _check_range(t)
    where = defaultdict(list)
    for i, row in enumerate(t.grid, 1):
        for j, pair in enumerate(row, 1):
            where[pair].append((i, j))
    rep = OlsDefectReport()
    rep.repeated_pairs = {p: cells for p, cells in sorted(where.items()) if len(cells) > 1}
    rep.missing_pairs = [
        (k, l) for k in range(1, t.d + 1) for l in range(1, t.d + 1) if (k, l) not in where
    ]
    for c in (0, 1):
        a = t.component(c)
        rep.row_conflicts[c] = _conflicts(a, 0)
        rep.column_conflicts[c] = _conflicts(a, 1)
    return rep


def ols_modular(d: int) -> DesignTable:
    """Cell (i, j) holds (i+j, i+2j) reduced to 1..d; orthogonal for odd d."""
    if d < 3 or d % 2 == 0:
        raise EvenDimension(f"modular construction needs odd d >= 3, got {d}")
    red = lambda x: (x - 1) % d + 1  # noqa: E731
    return DesignTable.from_rows(
        [[(red(i + j), red(i + 2 * j)) for j in range(1, d + 1)] for i in range(1, d + 1)]
    )


def permutation_from_design(t: DesignTable) -> np.ndarray:
    """Block lift: block (i, j) of size d holds a single 1 at (k, l) = t.grid[i][j].

    For a design built from a tensor T this is the reshuffled matrix
    ``(T as U)^R``; an OLS lifts to a 2-unitary permutation.
    """
    _check_range(t)
    d = t.d
    P = np.zeros((d * d, d * d))
    for i, row in enumerate(t.grid):
        for j, (k, l) in enumerate(row):
            P[i * d + k - 1, j * d + l - 1] += 1
    ones = P.astype(int)
    if not (np.all(ones.sum(0) == 1) and np.all(ones.sum(1) == 1)):
        raise ValueError("design does not lift to a permutation matrix")
    return P


_TABLES = {
    # block lift reproduces the 9x9 permutation printed for AME(4,3)
    "P9": """\
31 13 22
23 32 11
12 21 33""",
    # closest approximation to OLS(6)
    "P36": """\
11 22 33 44 55 66
23 14 45 36 61 52
32 41 64 53 16 25
46 35 51 62 24 13
54 63 26 15 42 31
65 56 12 21 33 44""",
    # differs from P36 in the last two rows
    "Ps": """\
11 22 33 44 55 66
23 14 45 36 61 52
32 41 64 53 16 25
46 35 51 62 24 13
64 56 26 15 43 31
55 63 12 21 42 34""",
}

BUILTIN_NAMES = tuple(_TABLES)


def parse_design(text: str) -> DesignTable:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if len(lines[0]) == 1 and len(lines) > 1 and len(lines[1]) > 1:
        d = int(lines[0][0])
        lines = lines[1:]
    else:
        d = len(lines)
    if len(lines) != d or any(len(ln) != d for ln in lines):
        raise BadSymbolRange(f"expected {d} rows of {d} pairs")
    for ln in lines:
        for tok in ln:
            if len(tok) != 2 or not tok.isdigit():
                raise BadSymbolRange(f"bad pair token {tok!r}")
    t = DesignTable.from_rows([[(int(tok[0]), int(tok[1])) for tok in ln] for ln in lines])
    _check_range(t)
    return t


def format_design(t: DesignTable) -> str:
    body = "\n".join(" ".join(f"{k}{l}" for k, l in row) for row in t.grid)
    return f"{t.d}\n{body}\n"


def read_design(path) -> DesignTable:
    return parse_design(Path(path).read_text())


def write_design(t: DesignTable, path) -> None:
    if t.d > 9:
        raise ValueError("two-digit pair format only covers d <= 9")
    Path(path).write_text(format_design(t))


def builtin_design(name: str) -> DesignTable:
    try:
        return parse_design(_TABLES[name])
    except KeyError:
        raise UnknownName(name) from None


# Coarse-grained OLS of order 6: rank groups A,B,C and suit groups a,b,c,
# each standing for the symbol pairs {1,2}, {3,4}, {5,6}.
FIG5_COARSE_OLS = (
    "Aa Ab Cc Ca Bb Bc",
    "Ca Cb Bc Ba Ab Ac",
    "Bc Ba Ab Ac Ca Cb",
    "Ac Aa Cb Cc Ba Bb",
    "Cb Cc Ba Bb Ac Aa",
    "Bb Bc Aa Ab Cc Ca",
)


def coarse_support_mask(coarse=FIG5_COARSE_OLS, groups=((1, 2), (3, 4), (5, 6))) -> np.ndarray:
    """Boolean (d,d,d,d) mask allowed by a coarse-grained table of group pairs."""
    rows = [r.split() for r in coarse]
    d = len(rows)
    mask = np.zeros((d, d, d, d), dtype=bool)
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            K = "ABC".index(cell[0])
            L = "abc".index(cell[1])
            for k in groups[K]:
                for l in groups[L]:
                    mask[i, j, k - 1, l - 1] = True
    return mask


@dataclass
class CoarseGrainReport:
    passed: bool
    table: list  # table[i][j] = (K, L) group indices, or None for a mixed/empty cell
    mixed_cells: list
    pair_counts: dict
    line_counts_ok: bool


def coarse_grain_check(T, groups=((1, 2), (3, 4), (5, 6)), tol: float = 1e-9) -> CoarseGrainReport:
    """Coarse-grain the support of a d=6 tensor and test the OLS-like counting rules.

    (a) every coarse pair (K, L) occupies exactly four cells;
    (b) within each row and each column, every coarse symbol appears exactly
        twice in each of the two positions.
    """
    T = np.asarray(T)
    if T.ndim == 2:
        T = to_tensor(T)
    d = T.shape[0]
    if d != 6:
        raise WrongDimension(f"coarse graining is defined for d=6, got d={d}")
    gid = {s - 1: g for g, members in enumerate(groups) for s in members}
    ng = len(groups)
    support = np.abs(T) > tol
    table, mixed = [], []
    for i in range(d):
        row = []
        for j in range(d):
            ks, ls = np.nonzero(support[i, j])
            pairs = {(gid[k], gid[l]) for k, l in zip(ks, ls)}
            if len(pairs) == 1:
                row.append(pairs.pop())
            else:
                row.append(None)
                mixed.append((i + 1, j + 1))
        table.append(row)
    counts = Counter(c for row in table for c in row if c is not None)
    per_pair = d * d // (ng * ng)
    pairs_ok = not mixed and all(counts[(K, L)] == per_pair for K in range(ng) for L in range(ng))
    lines_ok = False
    if not mixed:
        want = d // ng
        lines_ok = True
        for n in range(d):
            for line in (table[n], [table[m][n] for m in range(d)]):
                for pos in (0, 1):
                    c = Counter(cell[pos] for cell in line)
                    if any(c[g] != want for g in range(ng)):
                        lines_ok = False
    return CoarseGrainReport(
        passed=pairs_ok and lines_ok,
        table=table,
        mixed_cells=mixed,
        pair_counts=dict(counts),
        line_counts_ok=lines_ok,
    )


@dataclass
class OqlsReport:
    passed: bool
    failed: str | None
    deviations: dict


def oqls_check(states, tol: float | None = None) -> OqlsReport:
    """Test the three orthogonality conditions for ``states[i, j] = C^{i,j}``.

    (a) Tr C^{ij} C^{kl}† = delta_ik delta_jl
    (b) sum_i C^{ij} C^{il}† = delta_jl I
    (c) sum_j C^{ij} C^{kj}† = delta_ik I
    """
    tol = default_tol() if tol is None else tol
    C = np.asarray(states)
    if C.ndim != 4 or len(set(C.shape)) != 1:
        raise ShapeMismatch(f"expected (d, d, d, d) coefficient blocks, got {C.shape}")
    d = C.shape[0]
    eye = np.eye(d)
    gram = np.einsum("ijab,klab->ijkl", C, C.conj())
    dev_a = np.linalg.norm(gram.reshape(d * d, d * d) - np.eye(d * d))
    b = np.einsum("ijab,ilcb->jlac", C, C.conj())
    dev_b = np.linalg.norm(b - np.einsum("jl,ac->jlac", eye, eye))
    c = np.einsum("ijab,kjcb->ikac", C, C.conj())
    dev_c = np.linalg.norm(c - np.einsum("ik,ac->ikac", eye, eye))
    devs = {"a": float(dev_a), "b": float(dev_b), "c": float(dev_c)}
    failed = next((k for k, v in devs.items() if v > tol), None)
    return OqlsReport(passed=failed is None, failed=failed, deviations=devs)
