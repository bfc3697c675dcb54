"""Command-line front end.

    python -m rdfplus --mode check-valid FORMULA_OR_FILE
    python -m rdfplus --mode sample "1,6,-12" --n 512

Exit codes: 0 success, 1 verdict or property failure, 2 parse error,
3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .decide import decide, prepare
from .elastic import NoExistence, make_defined, sample
from .parser import ParseError, parse_formula
from .smt import DEFAULT_TIMEOUT, Sat, SolverError
from .witness import (
    AlphaSearchExhausted, ApproximateModel, ExistenceViolation, search_alpha, witnesses_to_json,
)

MODES = ("check-valid", "check-sat", "emit-smt", "witness", "corpus", "sample")
EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_SOLVER = 0, 1, 2, 3


class InputError(ValueError):
    """Malformed command input other than formula syntax; exits like a parse error."""


@dataclass
class RunConfig:
    mode: str
    input: str | None = None
    solver: str | None = None
    timeout: float = DEFAULT_TIMEOUT
    grid: int = 256
    jobs: int = 4
    branch_cap: int = 8
    format: str = "text"
    out: str = "smt"
    n: int = 512
    variants: bool = False


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def build_parser():
    p = argparse.ArgumentParser(prog="rdfplus", description="Decide RDF+ formulas and build witnesses.")
    p.add_argument("input", nargs="?", help="formula text, a file containing one, or sample parameters")
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--solver", help="solver command (default: $RDF_SOLVER_CMD or 'z3 -in')")
    p.add_argument("--timeout", type=_positive(float), default=DEFAULT_TIMEOUT, help="seconds per branch")
    p.add_argument("--grid", type=_positive(int), default=256, help="grid points per interval")
    p.add_argument("--jobs", type=_positive(int), default=4)
    p.add_argument("--branch-cap", type=_positive(int), default=8)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", default="smt", help="emit-smt output directory")
    p.add_argument("--n", type=_positive(int), default=512, help="sample rows")
    p.add_argument("--variants", action="store_true", help="corpus: include the variant formulas")
    return p


def _read_formula(text):
    if text is None:
        raise InputError("no formula given")
    path = Path(text)
    if len(text) < 4096 and path.is_file():
        text = path.read_text()
    return parse_formula(text)


def _model_json(model):
    return {k: str(v) for k, v in sorted(model.assignment.items())}


def _emit(cfg, obj, text, stream):
    if cfg.format == "json":
        stream.write(json.dumps(obj, indent=2) + "\n")
    else:
        stream.write(text + "\n")


def cmd_check(cfg: RunConfig, stream=sys.stdout) -> int:
    phi = _read_formula(cfg.input)
    mode = "validity" if cfg.mode == "check-valid" else "satisfiability"
    d = decide(phi, mode, cfg.solver, cfg.timeout, cfg.jobs, cfg.branch_cap)
    obj = {"verdict": d.verdict, "branches": len(d.branches)}
    lines = [f"{d.verdict} ({len(d.branches)} branches)"]
    sat = d.first_sat()
    if sat:
        obj["branch"] = sat.index
        obj["model"] = _model_json(sat.result.model)
        obj["exact"] = sat.result.model.exact
        lines.append(f"branch {sat.index}:")
        lines += [f"  {k} = {v}" for k, v in obj["model"].items()]
    _emit(cfg, obj, "\n".join(lines), stream)
    good = "VALID" if mode == "validity" else "SAT"
    return EXIT_OK if d.verdict == good else EXIT_FAIL


def cmd_emit(cfg: RunConfig, stream=sys.stdout) -> int:
    phi = _read_formula(cfg.input)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for b in prepare(phi, "satisfiability", cfg.branch_cap):
        path = out / f"branch_{b.index:04d}.smt2"
        path.write_text(b.script)
        paths.append(str(path))
    _emit(cfg, {"files": paths}, "\n".join(paths), stream)
    return EXIT_OK


def cmd_witness(cfg: RunConfig, stream=sys.stdout) -> int:
    phi = _read_formula(cfg.input)
    d = decide(phi, "satisfiability", cfg.solver, cfg.timeout, cfg.jobs, cfg.branch_cap)
    sat = d.first_sat()
    if sat is None:
        _emit(cfg, {"error": "no model", "verdict": d.verdict}, f"no model ({d.verdict})", stream)
        return EXIT_FAIL
    try:
        alpha, ws, rep = search_alpha(sat.reduced, sat.result.model, cfg.grid, allow_approximate=True)
    except AlphaSearchExhausted as e:
        obj = {"error": str(e), "report": e.report.to_json()}
        _emit(cfg, obj, f"witness search failed: {e}", stream)
        return EXIT_FAIL
    except (ExistenceViolation, ApproximateModel) as e:
        _emit(cfg, {"error": str(e)}, f"witness construction failed: {e}", stream)
        return EXIT_FAIL
    obj = {
        "branch": sat.index, "model": _model_json(sat.result.model),
        "witnesses": witnesses_to_json(ws, alpha), "report": rep.to_json(),
    }
    lines = [f"branch {sat.index}, alpha = {alpha}, report: {'pass' if rep.ok else 'FAIL'}"
             + (" (approximate model)" if rep.approximate else "")]
    for f, w in ws.items():
        lines.append(f"  {f}: {len(w.breakpoints)} breakpoints, pieces "
                     + ", ".join(p.kind for p in w.pieces))
    for c in rep.checks:
        lines.append(f"  [{'ok' if c.ok else 'FAIL'}] {c.literal}  margin {c.margin:.3g} {c.note}".rstrip())
    lines.append(f"  worst stitching residual {rep.worst_stitch:.2e}")
    _emit(cfg, obj, "\n".join(lines), stream)
    return EXIT_OK if rep.ok else EXIT_FAIL


def corpus_files(variants=False) -> list:
    root = resources.files("rdfplus") / "corpus"
    files = sorted((p for p in root.iterdir() if p.name.endswith(".rdf")), key=lambda p: p.name)
    if variants:
        files += sorted((p for p in (root / "variants").iterdir() if p.name.endswith(".rdf")),
                        key=lambda p: p.name)
    return files


def cmd_corpus(cfg: RunConfig, stream=sys.stdout) -> int:
    if cfg.input:
        src = Path(cfg.input)
        files = sorted(src.glob("*.rdf")) if src.is_dir() else [src]
    else:
        files = corpus_files(cfg.variants)
    rows = []
    for p in files:
        t0 = time.perf_counter()
        d = decide(parse_formula(p.read_text()), "validity", cfg.solver, cfg.timeout, cfg.jobs,
                   cfg.branch_cap)
        rows.append({"name": p.name[:-4], "verdict": d.verdict, "branches": len(d.branches),
                     "seconds": round(time.perf_counter() - t0, 2)})
    width = max((len(r["name"]) for r in rows), default=4)
    text = "\n".join(f"{r['name']:<{width}}  {r['verdict']:<8} {r['branches']:>5} branches  {r['seconds']:.1f}s"
                     for r in rows)
    _emit(cfg, {"rows": rows}, text, stream)
    return EXIT_OK if all(r["verdict"] == "VALID" for r in rows) else EXIT_FAIL


def _sample_params(text):
    if not text:
        raise InputError("sample needs 'alpha,theta1,theta2'")
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise InputError("sample needs exactly three numbers")
    try:
        return [Fraction(x) for x in parts]
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(str(e)) from None


def cmd_sample(cfg: RunConfig, stream=sys.stdout) -> int:
    alpha, th1, th2 = _sample_params(cfg.input)
    try:
        spec = make_defined(alpha, th1, th2)
    except NoExistence as e:
        sys.stderr.write(f"no such function: {e}\n")
        return EXIT_FAIL
    if cfg.n < 2:
        raise InputError("need at least two rows")
    out = csv.writer(stream, lineterminator="\n")
    out.writerow(["x", "value", "derivative"])
    for x, v, dv in sample(spec, cfg.n):
        out.writerow([repr(float(x)), repr(float(v)), repr(float(dv))])
    return EXIT_OK


COMMANDS = {"check-valid": cmd_check, "check-sat": cmd_check, "emit-smt": cmd_emit,
            "witness": cmd_witness, "corpus": cmd_corpus, "sample": cmd_sample}


def run(argv=None, stream=None) -> int:
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.mode, args.input, args.solver, args.timeout, args.grid, args.jobs,
                    args.branch_cap, args.format, args.out, args.n, args.variants)
    try:
        return COMMANDS[cfg.mode](cfg, stream)
    except (ParseError, InputError) as e:
        sys.stderr.write(f"parse error: {e}\n")
        return EXIT_PARSE
    except SolverError as e:
        sys.stderr.write(f"solver error: {e}\n")
        return EXIT_SOLVER


def main():
    sys.exit(run())
