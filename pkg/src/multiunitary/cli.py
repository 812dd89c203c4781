"""Command line entry point: ``multiunitary <subcommand> ...``.

Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cyclotomic as cyc
from .ame import ame_check, bell_rank_check, block_structure_detect, row_states, state_from_unitary
from .designs import (
    BUILTIN_NAMES,
    builtin_design,
    check_ols,
    coarse_grain_check,
    format_design,
    oqls_check,
    ols_modular,
    permutation_from_design,
    read_design,
)
from .dynmap import SEED_KINDS, SeedSpec, batch_run
from .golden import load_golden, realize
from .metrics import gate_metrics
from .qecc import CodeSpace, encode, kl_check, make_code, weyl_basis
from .tensor_core import (
    default_tol,
    partial_transpose,
    read_dense_csv,
    reshuffle,
    unitarity_defect,
    write_dense_csv,
)

log = logging.getLogger("multiunitary")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
ALL_CHECKS = ("unitary", "dual", "2unitary", "ame", "bell-rows", "blocks", "coarse")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    flags: dict = field(default_factory=dict)
    rng_seed: int | None = None
    out_dir: str | None = None
    tol: float = 1e-10


def _config(args) -> RunConfig:
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    return RunConfig(
        subcommand=args.command,
        flags=flags,
        rng_seed=flags.get("rng_seed"),
        out_dir=flags.get("out_dir"),
        tol=flags.get("tol") or default_tol(),
    )


def _write_manifest(cfg: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(asdict(cfg), indent=2, sort_keys=True, default=str) + "\n")
    (out / "timestamp.json").write_text(json.dumps({"finished": time.strftime("%Y-%m-%dT%H:%M:%S")}) + "\n")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(type(x))


def load_matrix(path) -> np.ndarray:
    """Dense CSV (``d`` header) or symbolic CSV/JSON of the golden form."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix == ".json":
        return realize(load_golden(path))
    head = next((ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")), "")
    if head.strip() == "d":
        return read_dense_csv(path)
    return realize(load_golden(path))


# -- subcommands --------------------------------------------------------------


def cmd_search(args) -> int:
    cfg = _config(args)
    if args.seed_kind != "haar" and not args.perm:
        raise ConfigError("--perm is required for permutation-based seeds")
    specs = [
        SeedSpec(kind=args.seed_kind, d=args.d, perm=args.perm, epsilon=args.epsilon, rng_seed=args.rng_seed + n)
        for n in range(args.trials)
    ]
    out = Path(args.out_dir) if args.out_dir else None
    summary = batch_run(
        specs, jobs=args.jobs, out_dir=out, keep_trajectories=args.polish, tol=args.tol, max_iter=args.max_iter
    )
    if args.polish and out is not None:
        from .polish import polish

        polished = []
        for idx, t in enumerate(summary.pop("trajectories")):
            if t.outcome != "TwoUnitary" or t.final.shape != (36, 36):
                continue
            res = polish(t.final, rng=args.rng_seed + idx)
            polished.append({"index": idx, "success": res.success, "leakage": res.leakage})
            if res.success:
                write_dense_csv(res.matrix, out / f"polished_{idx:04d}.csv")
        (out / "polished.json").write_text(json.dumps(polished, indent=2) + "\n")
    summary.pop("trajectories", None)
    if out is not None:
        _write_manifest(cfg, out)
    brief = {k: summary[k] for k in ("trials", "outcomes", "two_unitary_fraction", "best_delta")}
    _emit(brief)
    if args.require_hit and summary["outcomes"]["TwoUnitary"] == 0:
        return EXIT_FAIL
    return EXIT_OK


def _verify_report(U: np.ndarray, checks, tol: float) -> dict:
    rep = {}
    R, G = reshuffle(U), partial_transpose(U)
    if "unitary" in checks:
        v = unitarity_defect(U)
        rep["unitary"] = {"pass": v <= tol, "defect": v}
    if "dual" in checks:
        v = unitarity_defect(R)
        rep["dual"] = {"pass": v <= tol, "defect": v}
    if "2unitary" in checks:
        m = gate_metrics(U)
        v = unitarity_defect(G)
        rep["2unitary"] = {
            "pass": m.delta <= 1e-12 and v <= tol and unitarity_defect(R) <= tol,
            "delta": m.delta,
            "gamma_defect": v,
        }
    if "ame" in checks:
        try:
            a = ame_check(state_from_unitary(U, tol=max(tol, 1e-6)), tol)
            rep["ame"] = {"pass": a.passed, **a.deviations}
            rep["oqls"] = {"pass": oqls_check(row_states(U), tol).passed}
        except ValueError as exc:
            rep["ame"] = {"pass": False, "error": str(exc)}
    if "bell-rows" in checks:
        C = row_states(U)
        d = C.shape[0]
        bad = [i * d + j + 1 for i in range(d) for j in range(d) if not bell_rank_check(C[i, j], tol)]
        rep["bell-rows"] = {"pass": not bad, "failed_rows": bad}
    if "blocks" in checks:
        out = {}
        for name, X in (("U", U), ("R", R), ("G", G)):
            b = block_structure_detect(X, 1e-9)
            out[name] = {"sizes": b.sizes, "max_defect": float(np.nanmax(b.defects))}
        ok = all(len(v["sizes"]) > 1 and v["max_defect"] <= tol for v in out.values())
        rep["blocks"] = {"pass": ok, **out}
    if "coarse" in checks:
        try:
            cg = coarse_grain_check(U)
            rep["coarse"] = {"pass": cg.passed, "mixed_cells": cg.mixed_cells}
        except ValueError as exc:
            rep["coarse"] = {"pass": False, "error": str(exc)}
    return rep


def cmd_verify(args) -> int:
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = set(checks) - set(ALL_CHECKS)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")
    U = load_matrix(args.input)
    rep = _verify_report(U, checks, args.tol or default_tol())
    _emit(rep)
    return EXIT_OK if all(v["pass"] for v in rep.values()) else EXIT_FAIL


def cmd_certify(args) -> int:
    k = cyc.build_constants()
    ok = True
    for name, zero, residue in cyc.verify_constellations(k):
        ok &= zero
        print(f"{name}: {'EXACT ZERO' if zero else 'residue ' + str([str(c) for c in residue.coeffs])}")
    v_ok = cyc.verify_block_V(k)
    print(f"block V: {'V V^dagger = I EXACT' if v_ok else 'FAILED'}")
    for name, good in k.check().items():
        print(f"constants {name}: {'EXACT' if good else 'FAILED'}")
    ok &= v_ok and all(k.check().values())
    return EXIT_OK if ok else EXIT_FAIL


def cmd_metrics(args) -> int:
    U = load_matrix(args.input)
    _emit(gate_metrics(U).as_dict())
    return EXIT_OK


def cmd_designs(args) -> int:
    if sum(x is not None for x in (args.emit, args.modular, args.input)) != 1:
        raise ConfigError("give exactly one of --emit, --modular, --in")
    if args.emit:
        t = builtin_design(args.emit)
    elif args.modular is not None:
        t = ols_modular(args.modular)
    else:
        t = read_design(args.input)
    if args.lift:
        P = permutation_from_design(t)
        if args.out:
            write_dense_csv(P, args.out)
        else:
            for row in P.astype(int):
                print(" ".join(map(str, row)))
        return EXIT_OK
    rep = check_ols(t)
    _emit(
        {
            "design": format_design(t).splitlines(),
            "is_ols": rep.is_ols,
            "repeated_pairs": {f"{k}{l}": cells for (k, l), cells in rep.repeated_pairs.items()},
            "missing_pairs": [f"{k}{l}" for k, l in rep.missing_pairs],
            "row_conflicts": rep.row_conflicts,
            "column_conflicts": rep.column_conflicts,
        }
    )
    return EXIT_OK if rep.is_ols or not args.check else EXIT_FAIL


def _write_vector(v: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write("index,re,im\n")
        for n, z in enumerate(v, 1):
            fh.write(f"{n},{z.real:.17g},{z.imag:.17g}\n")


def _read_vector(path) -> np.ndarray:
    rows = Path(path).read_text().split()
    if rows[0] != "index,re,im":
        raise ValueError(f"{path}: missing 'index,re,im' header")
    vals = [r.split(",") for r in rows[1:]]
    return np.array([complex(float(a), float(b)) for _, a, b in vals])


def save_code(code: CodeSpace, path) -> None:
    words = [[[z.real, z.imag] for z in w] for w in code.codewords]
    Path(path).write_text(json.dumps({"d": code.d, "codewords": words}) + "\n")


def load_code(path) -> CodeSpace:
    obj = json.loads(Path(path).read_text())
    words = np.array([[complex(a, b) for a, b in w] for w in obj["codewords"]])
    return CodeSpace(int(obj["d"]), words)


def cmd_encode(args) -> int:
    U = load_matrix(args.input)
    if args.all:
        code = make_code(U)
        if args.out:
            save_code(code, args.out)
        gram = code.gram()
        _emit({"d": code.d, "gram_deviation": float(np.linalg.norm(gram - np.eye(code.d)))})
        return EXIT_OK
    if (args.basis_state is None) == (args.vector is None):
        raise ConfigError("give exactly one of --basis-state, --vector, or --all")
    x = args.basis_state if args.basis_state is not None else _read_vector(args.vector)
    v = encode(x, U)
    if args.out:
        _write_vector(v, args.out)
    _emit({"norm": float(np.linalg.norm(v)), "support": int(np.sum(np.abs(v) > 1e-12))})
    return EXIT_OK


def cmd_kl_check(args) -> int:
    path = Path(args.input)
    code = load_code(path) if path.suffix == ".json" else make_code(load_matrix(path))
    errors = weyl_basis(code.d, args.weight, 3)
    rep = kl_check(code, errors, args.tol or default_tol())
    _emit(
        {
            "pass": rep.passed,
            "errors_checked": rep.n_errors,
            "failures": len(rep.failures),
            "worst_offdiag": rep.worst_offdiag,
            "worst_diag_spread": rep.worst_spread,
        }
    )
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multiunitary", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", help="iterate the map from many seeds")
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--seed-kind", choices=SEED_KINDS, default="haar")
    s.add_argument("--perm", choices=BUILTIN_NAMES)
    s.add_argument("--epsilon", type=float, default=0.05)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--max-iter", type=int, default=20000)
    s.add_argument("--rng-seed", type=int, default=0)
    s.add_argument("--out-dir")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--require-hit", action="store_true")
    s.add_argument("--polish", action="store_true", help="canonicalise converged d=6 matrices")
    s.set_defaults(func=cmd_search)

    v = sub.add_parser("verify", help="check a matrix file")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--checks", default=",".join(ALL_CHECKS))
    v.add_argument("--tol", type=float)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("certify", help="exact cyclotomic certification of the golden relations")
    c.set_defaults(func=cmd_certify)

    m = sub.add_parser("metrics", help="entangling power and friends")
    m.add_argument("--in", dest="input", required=True)
    m.set_defaults(func=cmd_metrics)

    g = sub.add_parser("designs", help="emit, lift or check a design table")
    g.add_argument("--emit", choices=BUILTIN_NAMES)
    g.add_argument("--modular", type=int)
    g.add_argument("--in", dest="input")
    g.add_argument("--lift", action="store_true")
    g.add_argument("--check", action="store_true", help="exit 1 unless the table is an OLS")
    g.add_argument("--out")
    g.set_defaults(func=cmd_designs)

    e = sub.add_parser("encode", help="shortened-code encoder")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--basis-state", type=int)
    e.add_argument("--vector")
    e.add_argument("--all", action="store_true", help="encode every basis state (code file)")
    e.add_argument("--out")
    e.set_defaults(func=cmd_encode)

    k = sub.add_parser("kl-check", help="error-detection conditions for the shortened code")
    k.add_argument("--in", dest="input", required=True)
    k.add_argument("--weight", type=int, choices=(1, 2), default=1)
    k.add_argument("--tol", type=float)
    k.set_defaults(func=cmd_kl_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
