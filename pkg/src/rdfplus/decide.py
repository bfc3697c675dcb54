"""Run the reduction and discharge every branch to the external solver."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .eliminate import pipeline
from .smt import DEFAULT_TIMEOUT, Sat, Unknown, Unsat, emit_smtlib, solve_external
from .tarski import clear_divisions


@dataclass
class BranchResult:
    index: int
    reduced: object
    polynomial: object
    script: str
    result: object = None


@dataclass
class Decision:
    verdict: str
    branches: list = field(default_factory=list)

    @property
    def sat_branches(self):
        return [b for b in self.branches if isinstance(b.result, Sat)]

    def first_sat(self):
        sats = self.sat_branches
        return sats[0] if sats else None


def prepare(phi, mode="satisfiability", cap=8) -> list:
    out = []
    for i, red in enumerate(pipeline(phi, mode, cap)):
        poly = clear_divisions(red.formula, red.known_positive)
        header = f"branch {i}\n" + "\n".join(f"{r}: {s}" for r, s in red.branch.trace)
        out.append(BranchResult(i, red, poly, emit_smtlib(poly, header)))
    return out


def _body(script):
    return "\n".join(ln for ln in script.splitlines() if not ln.startswith(";"))


def decide(phi, mode="satisfiability", solver=None, timeout=DEFAULT_TIMEOUT, jobs=4,
           cap=8, stop_on_sat=True) -> Decision:
    """Verdict over all branches.

    Satisfiability: SAT if some branch is sat, UNSAT if all are unsat, else
    UNKNOWN.  Validity (the negation is reduced): VALID iff every branch is
    unsat, INVALID if one is sat, else UNKNOWN.
    """
    branches = prepare(phi, mode, cap)
    cache = {}
    unique = []
    for b in branches:
        key = _body(b.script)
        if key not in cache:
            cache[key] = b
            unique.append(b)

    def run(b):
        b.result = solve_external(b.script, solver, timeout)
        return b.result

    found_sat = False
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for start in range(0, len(unique), max(1, jobs) * 4):
            chunk = unique[start:start + max(1, jobs) * 4]
            results = list(pool.map(run, chunk))
            if stop_on_sat and any(isinstance(r, Sat) for r in results):
                found_sat = True
                break
    for b in branches:
        twin = cache[_body(b.script)]
        b.result = twin.result
    results = [b.result for b in branches if b.result is not None]
    if found_sat or any(isinstance(r, Sat) for r in results):
        verdict = "INVALID" if mode == "validity" else "SAT"
    elif len(results) == len(branches) and all(isinstance(r, Unsat) for r in results):
        verdict = "VALID" if mode == "validity" else "UNSAT"
    else:
        verdict = "UNKNOWN"
    return Decision(verdict, branches)


__all__ = ["Decision", "BranchResult", "decide", "prepare", "Sat", "Unsat", "Unknown"]
