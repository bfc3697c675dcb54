"""SMT-LIB2 emission, external solver driver and model parsing."""
from __future__ import annotations

import os
import shlex
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .tarski import (
    PolyAtom, TAnd, TAtom, TImplies, TNot, TOr, clear_divisions, conjuncts,
    free_vars, has_division,
)

DEFAULT_SOLVER = "z3 -in"
DEFAULT_TIMEOUT = 30.0
RATIONAL_TOL = Fraction(1, 10 ** 12)


@dataclass
class NumericModel:
    assignment: dict = field(default_factory=dict)
    exact: bool = True

    def __getitem__(self, name):
        return self.assignment[name]


@dataclass
class Sat:
    model: NumericModel


@dataclass
class Unsat:
    pass


@dataclass
class Unknown:
    reason: str


class SolverError(RuntimeError):
    pass


class SolverNotFound(SolverError):
    pass


class SolverTimeout(SolverError):
    def __init__(self, budget):
        super().__init__(f"solver exceeded {budget}s")
        self.budget = budget


class SolverProtocolError(SolverError):
    def __init__(self, raw):
        super().__init__(f"unexpected solver output: {raw[:200]!r}")
        self.raw = raw


class ModelParseError(ValueError):
    pass


# ---------------------------------------------------------------- emission

def smt_symbol(name: str) -> str:
    simple = all(c.isalnum() or c in "_.~!@$%^&*+-/<>=?" for c in name) and not name[0].isdigit()
    return name if simple else f"|{name}|"


def _smt_number(c: Fraction) -> str:
    assert c.denominator == 1
    n = c.numerator
    return f"{n}.0" if n >= 0 else f"(- {-n}.0)"


def _smt_poly(p) -> str:
    if p.is_zero():
        return "0.0"
    parts = []
    for mono, c in p.sorted_terms():
        factors = []
        for v, e in mono:
            factors.extend([smt_symbol(v)] * e)
        if not factors:
            parts.append(_smt_number(c))
        elif c == 1:
            parts.append(factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})")
        else:
            parts.append(f"(* {_smt_number(c)} {' '.join(factors)})")
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def smt_expr(phi) -> str:
    if isinstance(phi, PolyAtom):
        lhs = _smt_poly(phi.poly)
        if phi.rel == "!=":
            return f"(not (= {lhs} 0.0))"
        return f"({phi.rel} {lhs} 0.0)"
    if isinstance(phi, TAnd):
        return "true" if not phi.args else f"(and {' '.join(smt_expr(a) for a in phi.args)})"
    if isinstance(phi, TOr):
        return "false" if not phi.args else f"(or {' '.join(smt_expr(a) for a in phi.args)})"
    if isinstance(phi, TNot):
        return f"(not {smt_expr(phi.arg)})"
    if isinstance(phi, TImplies):
        return f"(=> {smt_expr(phi.left)} {smt_expr(phi.right)})"
    if isinstance(phi, TAtom):
        raise ValueError("clear divisions and convert atoms before emitting")
    raise TypeError(phi)


def emit_smtlib(phi, header: str = "") -> str:
    """SMT-LIB2 script for a formula; TAtoms are converted to polynomial form
    first (they must be division-free)."""
    if has_division(phi):
        raise ValueError("formula still contains divisions")
    phi = clear_divisions(phi)
    lines = [f"; {ln}" for ln in header.splitlines()] if header else []
    lines.append("(set-logic QF_NRA)")
    for v in sorted(free_vars(phi)):
        lines.append(f"(declare-const {smt_symbol(v)} Real)")
    for c in conjuncts(phi):
        lines.append(f"(assert {smt_expr(c)})")
    lines += ["(check-sat)", "(get-model)", "(exit)"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- solving

def solver_command(cmd=None):
    cmd = cmd or os.environ.get("RDF_SOLVER_CMD") or DEFAULT_SOLVER
    return shlex.split(cmd) if isinstance(cmd, str) else list(cmd)


def solve_external(script: str, cmd=None, timeout: float = DEFAULT_TIMEOUT):
    argv = solver_command(cmd)
    try:
        proc = subprocess.run(argv, input=script, capture_output=True, text=True, timeout=timeout)
    except FileNotFoundError as e:
        raise SolverNotFound(argv[0]) from e
    except subprocess.TimeoutExpired as e:
        raise SolverTimeout(timeout) from e
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    first = first.strip()
    if first == "unsat":
        return Unsat()
    if first == "unknown":
        return Unknown(rest.strip() or "solver returned unknown")
    if first != "sat":
        raise SolverProtocolError(out + proc.stderr)
    model = parse_model(rest)
    for line in script.splitlines():
        if line.startswith("(declare-const "):
            name = line.split()[1].strip("|")
            model.assignment.setdefault(name, Fraction(0))
    return Sat(model)


# ---------------------------------------------------------------- model parsing

def read_sexprs(text: str) -> list:
    """Minimal s-expression reader: lists, |quoted| symbols, atoms."""
    out, stack, i, n = [], [[]], 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "(":
            stack.append([])
            i += 1
        elif c == ")":
            if len(stack) == 1:
                raise ModelParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            stack[-1].append(text[i + 1:j])
            i = j + 1
        elif c == '"':
            j = text.index('"', i + 1)
            stack[-1].append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            stack[-1].append(text[i:j])
            i = j
    if len(stack) != 1:
        raise ModelParseError("unbalanced '('")
    out = stack[0]
    return out


def _simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Rational with the smallest denominator in [lo, hi], 0 <= lo <= hi."""
    fl = lo.numerator // lo.denominator
    if fl == lo:
        return Fraction(fl)
    if fl + 1 <= hi:
        return Fraction(fl + 1)
    # same integer part: recurse on the reciprocals of the fractional parts
    return fl + 1 / _simplest_between(1 / (hi - fl), 1 / (lo - fl))


def rationalize(x, tol=RATIONAL_TOL) -> Fraction:
    """Simplest rational within tol of x."""
    x = Fraction(x)
    lo, hi = x - tol, x + tol
    if lo <= 0 <= hi:
        return Fraction(0)
    if hi < 0:
        return -_simplest_between(-hi, -lo)
    return _simplest_between(lo, hi)


class _Value:
    def __init__(self):
        self.exact = True


def _poly_coeffs(expr, var):
    """Coefficient list (lowest degree first) of a univariate polynomial s-expr."""
    def walk(e):
        if isinstance(e, str):
            if e == var:
                return {1: Fraction(1)}
            return {0: _literal(e)}
        head, args = e[0], e[1:]
        if head == "+":
            out = {}
            for a in args:
                for k, v in walk(a).items():
                    out[k] = out.get(k, 0) + v
            return out
        if head == "-":
            parts = [walk(a) for a in args]
            if len(parts) == 1:
                return {k: -v for k, v in parts[0].items()}
            out = dict(parts[0])
            for p in parts[1:]:
                for k, v in p.items():
                    out[k] = out.get(k, 0) - v
            return out
        if head == "*":
            out = {0: Fraction(1)}
            for a in args:
                w = walk(a)
                new = {}
                for k1, v1 in out.items():
                    for k2, v2 in w.items():
                        new[k1 + k2] = new.get(k1 + k2, 0) + v1 * v2
                out = new
            return out
        if head == "^":
            base = walk(args[0])
            k = int(_literal(args[1]))
            out = {0: Fraction(1)}
            for _ in range(k):
                new = {}
                for k1, v1 in out.items():
                    for k2, v2 in base.items():
                        new[k1 + k2] = new.get(k1 + k2, 0) + v1 * v2
                out = new
            return out
        raise ModelParseError(f"bad polynomial {e!r}")
    coeffs = walk(expr)
    deg = max(coeffs)
    return [coeffs.get(k, Fraction(0)) for k in range(deg + 1)]


def _root(coeffs, index) -> Fraction:
    """index-th (1-based, ascending) real root, refined by exact Newton steps."""
    roots = np.roots([float(c) for c in reversed(coeffs)])
    real = sorted(r.real for r in roots if abs(r.imag) < 1e-9)
    if not 1 <= index <= len(real):
        raise ModelParseError("root index out of range")
    x = Fraction(real[index - 1])
    deriv = [k * c for k, c in enumerate(coeffs)][1:]
    for _ in range(4):
        p = sum(c * x ** k for k, c in enumerate(coeffs))
        dp = sum(c * x ** k for k, c in enumerate(deriv))
        if dp == 0 or p == 0:
            break
        x = x - p / dp
        x = x.limit_denominator(10 ** 40)
    return x


def _literal(tok: str) -> Fraction:
    try:
        return Fraction(tok)
    except ValueError:
        raise ModelParseError(f"bad number {tok!r}") from None


def _value(e, flag: _Value) -> Fraction:
    if isinstance(e, str):
        if e.endswith("?"):
            flag.exact = False
            return _literal(e[:-1])
        return _literal(e)
    if not e:
        raise ModelParseError("empty expression")
    head, args = e[0], e[1:]
    if head == "/":
        return _value(args[0], flag) / _value(args[1], flag)
    if head == "-":
        vals = [_value(a, flag) for a in args]
        return -vals[0] if len(vals) == 1 else vals[0] - sum(vals[1:])
    if head == "+":
        return sum((_value(a, flag) for a in args), Fraction(0))
    if head == "*":
        out = Fraction(1)
        for a in args:
            out *= _value(a, flag)
        return out
    if head == "root-obj":
        flag.exact = False
        return _root(_poly_coeffs(args[0], "x"), int(args[1]))
    raise ModelParseError(f"unsupported value {e!r}")


def parse_model(text: str) -> NumericModel:
    """Parse a get-model block; approximate values are rationalized to within
    1e-12 and clear the exact flag."""
    model = NumericModel({}, True)
    for top in read_sexprs(text):
        entries = top if isinstance(top, list) else []
        if entries and entries[0] == "model":
            entries = entries[1:]
        if entries and entries[0] == "define-fun":
            entries = [entries]
        for d in entries:
            if not (isinstance(d, list) and d and d[0] == "define-fun"):
                continue
            if len(d) != 5:
                raise ModelParseError(f"malformed definition {d!r}")
            name, params, _sort, body = d[1], d[2], d[3], d[4]
            if params:
                continue
            flag = _Value()
            v = _value(body, flag)
            if not flag.exact:
                model.exact = False
                v = rationalize(v)
            model.assignment[name] = v
    return model
