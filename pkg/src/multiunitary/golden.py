"""Symbolic sparse form of the golden AME(4,6) matrix.

Every nonzero entry is ``amp * omega**exp`` with ``amp`` one of a, b, c and
``omega = exp(i pi/10)``; a minus sign is an exponent shift by 10.  The
full 36x36 entry list is input data (symbolic-csv or JSON); the package
ships only the published rows used as fixtures.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import cyclotomic as cyc
from .ame import ame_check, bell_rank_check, block_structure_detect, row_states, state_from_unitary
from .designs import coarse_grain_check
from .metrics import two_unitarity_defect
from .tensor_core import partial_transpose, reshuffle, unitarity_defect, write_dense_csv

__all__ = [
    "ParseError",
    "InvariantViolation",
    "IncompleteMatrix",
    "SymbolicEntry",
    "SymbolicMatrix",
    "AMPLITUDES",
    "load_golden",
    "loads_golden",
    "published_rows",
    "realize",
    "exact_entries",
    "exact_row_inner",
    "exact_bell_row",
    "verify_golden",
    "export",
]

N = 36
D = 6

AMPLITUDES = {
    "a": 1 / np.sqrt(5 + np.sqrt(5)),
    "b": np.sqrt((5 + np.sqrt(5)) / 20),
    "c": 1 / np.sqrt(2),
}


class ParseError(ValueError):
    pass


class InvariantViolation(ValueError):
    pass


class IncompleteMatrix(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SymbolicEntry:
    row: int  # 1..36
    col: int  # 1..36
    amp: str
    exp: int  # power of omega, 0..19


@dataclass
class SymbolicMatrix:
    entries: list = field(default_factory=list)
    provenance: str = ""

    def rows(self) -> dict:
        out = {}
        for e in sorted(self.entries):
            out.setdefault(e.row, []).append(e)
        return out

    @property
    def is_complete(self) -> bool:
        return set(self.rows()) == set(range(1, N + 1))

    def __eq__(self, other):
        if not isinstance(other, SymbolicMatrix):
            return NotImplemented
        return sorted(self.entries) == sorted(other.entries) and self.provenance == other.provenance


def _validate(entries: list) -> None:
    seen = set()
    for e in entries:
        if (e.row, e.col) in seen:
            raise ParseError(f"duplicate entry at ({e.row},{e.col})")
        seen.add((e.row, e.col))
    for row, es in SymbolicMatrix(entries).rows().items():
        amps = sorted(e.amp for e in es)
        if len(es) == 2 and amps == ["c", "c"]:
            continue
        if len(es) == 4 and amps == ["a", "a", "b", "b"]:
            continue
        raise InvariantViolation(f"row {row}: support {len(es)} with amplitudes {amps}")


def _entry(row, col, amp, exp, where) -> SymbolicEntry:
    try:
        row, col, exp = int(row), int(col), int(exp)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: non-integer field") from None
    amp = str(amp).strip()
    if amp not in AMPLITUDES:
        raise ParseError(f"{where}: amplitude {amp!r} not in a, b, c")
    if not (1 <= row <= N and 1 <= col <= N):
        raise ParseError(f"{where}: position ({row},{col}) outside 1..{N}")
    if not 0 <= exp < 20:
        raise ParseError(f"{where}: exponent {exp} outside 0..19")
    return SymbolicEntry(row, col, amp, exp)


def loads_golden(text: str, fmt: str = "csv") -> SymbolicMatrix:
    if fmt == "json":
        try:
            obj = json.loads(text)
            raw = [(e["row"], e["col"], e["amp"], e["exp"]) for e in obj["entries"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad JSON matrix: {exc}") from None
        entries = [_entry(*r, where=f"entry {n}") for n, r in enumerate(raw)]
        prov = obj.get("provenance", "")
    else:
        notes, body = [], []
        for line in text.splitlines():
            if line.startswith("#"):
                notes.append(line[1:].strip())
            elif line.strip():
                body.append(line)
        rows = list(csv.reader(body))
        if not rows or [h.strip() for h in rows[0]] != ["row", "col", "amp", "exp"]:
            raise ParseError("missing header 'row,col,amp,exp'")
        entries = []
        for n, r in enumerate(rows[1:], 2):
            if len(r) != 4:
                raise ParseError(f"line {n}: expected 4 fields")
            entries.append(_entry(*r, where=f"line {n}"))
        prov = "\n".join(notes)
        if prov.startswith("provenance:"):
            prov = prov[len("provenance:"):].strip()
    _validate(entries)
    return SymbolicMatrix(entries=entries, provenance=prov)


def load_golden(path) -> SymbolicMatrix:
    path = Path(path)
    return loads_golden(path.read_text(), "json" if path.suffix == ".json" else "csv")


def published_rows() -> SymbolicMatrix:
    """The four rows printed in closed form (psi_11, psi_12, psi_63, psi_66)."""
    text = resources.files("multiunitary.data").joinpath("published_rows.csv").read_text()
    return loads_golden(text)


def realize(M: SymbolicMatrix) -> np.ndarray:
    U = np.zeros((N, N), dtype=complex)
    for e in M.entries:
        U[e.row - 1, e.col - 1] = AMPLITUDES[e.amp] * np.exp(1j * np.pi * e.exp / 10)
    return U


def exact_entries(M: SymbolicMatrix, constants=None) -> dict:
    k = constants or cyc.build_constants()
    amp = {"a": k.a, "b": k.b, "c": k.c}
    return {(e.row - 1, e.col - 1): amp[e.amp] * cyc.omega(e.exp) for e in M.entries}


def _rearranged(entries: dict, how: str) -> dict:
    out = {}
    for (p, s), v in entries.items():
        i, j = divmod(p, D)
        k, l = divmod(s, D)
        if how == "R":
            # U^R[(i,j),(k,l)] = U[(i,k),(j,l)]
            out[(i * D + k, j * D + l)] = v
        elif how == "G":
            # U^G[(i,j),(k,l)] = U[(i,l),(k,j)]
            out[(i * D + l, k * D + j)] = v
        else:
            out[(p, s)] = v
    return out


def _by_row(entries: dict) -> dict:
    rows = {}
    for (p, s), v in entries.items():
        rows.setdefault(p, {})[s] = v
    return rows


def _inner(r1: dict, r2: dict) -> cyc.CycNumber:
    acc = cyc.CycNumber()
    for s, v in r1.items():
        if s in r2:
            acc = acc + v * r2[s].conj()
    return acc


def exact_row_inner(M: SymbolicMatrix, r: int, s: int, constants=None) -> cyc.CycNumber:
    """<row s | row r> in the cyclotomic field (1-based rows)."""
    rows = _by_row(exact_entries(M, constants))
    return _inner(rows.get(r - 1, {}), rows.get(s - 1, {}))


def exact_bell_row(M: SymbolicMatrix, r: int, constants=None) -> bool:
    """Row r has Schmidt coefficients (1/2, 1/2): 2 C C^dagger is a rank-2 projector."""
    row = _by_row(exact_entries(M, constants)).get(r - 1, {})
    C = {}
    for s, v in row.items():
        C[divmod(s, D)] = v
    zero = cyc.CycNumber()
    P = [[zero] * D for _ in range(D)]
    for (k, l), v in C.items():
        for (k2, l2), w in C.items():
            if l == l2:
                P[k][k2] = P[k][k2] + 2 * v * w.conj()
    P2 = [[sum((P[x][y] * P[y][z] for y in range(D)), zero) for z in range(D)] for x in range(D)]
    trace = sum((P[x][x] for x in range(D)), zero)
    return P2 == P and trace == 2


@dataclass
class GoldenReport:
    mode: str
    complete: bool
    checks: dict

    @property
    def passed(self) -> bool:
        return all(bool(v.get("pass")) for v in self.checks.values())


def _exact_gram_ok(rows: dict, active) -> tuple:
    bad = []
    idx = sorted(active)
    for n, p in enumerate(idx):
        for q in idx[n:]:
            g = _inner(rows.get(p, {}), rows.get(q, {}))
            if g != (1 if p == q else 0):
                bad.append((p + 1, q + 1))
    return not bad, bad


def verify_golden(M: SymbolicMatrix, mode: str = "numeric", tol: float = 1e-10, require_complete=False):
    """Numeric or exact verification report for a symbolic matrix.

    Partial matrices get the row-local checks only; asking for the global
    ones (``require_complete=True``) on partial data raises IncompleteMatrix.
    """
    complete = M.is_complete
    if require_complete and not complete:
        raise IncompleteMatrix(f"only rows {sorted(M.rows())} are present")
    checks = {}
    present = [r - 1 for r in M.rows()]
    if mode == "numeric":
        U = realize(M)
        C = row_states(U).reshape(N, D, D)
        norms = [float(np.linalg.norm(U[p])) for p in present]
        checks["row_norms"] = {"pass": all(abs(x - 1) <= tol for x in norms), "max_dev": max(abs(x - 1) for x in norms)}
        bell = {p + 1: bell_rank_check(C[p], tol) for p in present}
        checks["bell_rows"] = {"pass": all(bell.values()), "failed": [r for r, ok in bell.items() if not ok]}
        sub = U[present]
        gram = float(np.linalg.norm(sub @ sub.conj().T - np.eye(len(present))))
        checks["row_orthonormality"] = {"pass": gram <= tol, "deviation": gram}
        if complete:
            defs = {k: unitarity_defect(X) for k, X in (("U", U), ("R", reshuffle(U)), ("G", partial_transpose(U)))}
            checks["unitarity"] = {"pass": max(defs.values()) <= tol, **defs}
            delta = two_unitarity_defect(U)
            checks["delta"] = {"pass": delta <= 1e-12, "value": delta}
            ame = ame_check(state_from_unitary(U, tol=1e-6), tol)
            checks["ame"] = {"pass": ame.passed, **ame.deviations}
            blocks = {}
            for k, X in (("U", U), ("R", reshuffle(U)), ("G", partial_transpose(U))):
                b = block_structure_detect(X, 1e-9)
                blocks[k] = {"sizes": b.sizes, "max_defect": max(b.defects)}
            nine = all(v["sizes"] == [(4, 4)] * 9 and v["max_defect"] <= tol for v in blocks.values())
            checks["blocks"] = {"pass": nine, **blocks}
            cg = coarse_grain_check(U)
            checks["coarse"] = {"pass": cg.passed}
    elif mode == "exact":
        k = cyc.build_constants()
        ex = exact_entries(M, k)
        for name in ("U", "R", "G"):
            if name != "U" and not complete:
                continue
            rows = _by_row(_rearranged(ex, name))
            active = present if name == "U" else range(N)
            ok, bad = _exact_gram_ok(rows, active)
            checks[f"gram_{name}"] = {"pass": ok, "failed_pairs": bad[:20]}
        bell = {r: exact_bell_row(M, r, k) for r in M.rows()}
        checks["bell_rows_exact"] = {"pass": all(bell.values()), "failed": [r for r, v in bell.items() if not v]}
    else:
        raise ValueError(f"mode must be 'numeric' or 'exact', got {mode!r}")
    return GoldenReport(mode=mode, complete=complete, checks=checks)


def export(obj, path, fmt: str = "symbolic-csv") -> None:
    """Write a SymbolicMatrix (symbolic-csv, json, dense-csv) or a dense array (dense-csv)."""
    path = Path(path)
    if isinstance(obj, np.ndarray) or fmt == "dense-csv":
        write_dense_csv(realize(obj) if isinstance(obj, SymbolicMatrix) else obj, path)
        return
    entries = sorted(obj.entries)
    if fmt == "json":
        payload = {
            "provenance": obj.provenance,
            "entries": [{"row": e.row, "col": e.col, "amp": e.amp, "exp": e.exp} for e in entries],
        }
        path.write_text(json.dumps(payload, indent=1) + "\n")
    elif fmt == "symbolic-csv":
        buf = io.StringIO()
        for line in obj.provenance.splitlines():
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "amp", "exp"])
        for e in entries:
            w.writerow([e.row, e.col, e.amp, e.exp])
        path.write_text(buf.getvalue())
    else:
        raise ValueError(f"unknown format {fmt!r}")
