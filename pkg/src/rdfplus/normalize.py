"""Flat literals, disjunctive normal form and ordering of domain variables."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .syntax import (
    Add, And, Apply, Const0, Const1, DApply, DerivCmp, Fresh, FunEq, FunGt, Iff,
    Implies, Mul, NegInf, Not, NumEq, NumGt, Or, PosInf, Pred, Sub, Var, variables,
)
from .tarski import TAnd, TAtom, TImplies, TNot, TOr, atom, term_of

NEG = "-inf"
POS = "+inf"


class BranchExplosion(RuntimeError):
    pass


# ---------------------------------------------------------------- flat literals

@dataclass(frozen=True)
class FInterval:
    """Interval whose ends are variable names or the sentinels -inf / +inf."""
    lo: str
    hi: str
    lo_closed: bool
    hi_closed: bool

    @property
    def lo_inf(self):
        return self.lo == NEG

    @property
    def hi_inf(self):
        return self.hi == POS

    @property
    def is_closed(self):
        return (self.lo_inf or self.lo_closed) and (self.hi_inf or self.hi_closed)

    def closed(self):
        return FInterval(self.lo, self.hi, not self.lo_inf, not self.hi_inf)

    def ends(self):
        return [e for e in (self.lo, self.hi) if e not in (NEG, POS)]

    def __str__(self):
        return (("[" if self.lo_closed else "(") + f"{self.lo},{self.hi}"
                + ("]" if self.hi_closed else ")"))


@dataclass(frozen=True)
class ValueLit:
    """z = f(x)"""
    z: str
    f: str
    x: str

    def __str__(self):
        return f"{self.z} = {self.f}({self.x})"


@dataclass(frozen=True)
class SlopeLit:
    """z = D[f](x)"""
    z: str
    f: str
    x: str

    def __str__(self):
        return f"{self.z} = D[{self.f}]({self.x})"


@dataclass(frozen=True)
class FEq:
    f: str
    g: str
    interval: FInterval
    neg: bool = False

    def __str__(self):
        return ("!" if self.neg else "") + f"Eq({self.f},{self.g}) on {self.interval}"


@dataclass(frozen=True)
class FGt:
    f: str
    g: str
    interval: FInterval
    neg: bool = False

    def __str__(self):
        return ("!" if self.neg else "") + f"Gt({self.f},{self.g}) on {self.interval}"


@dataclass(frozen=True)
class Shape:
    kind: str
    f: str
    interval: FInterval
    neg: bool = False

    def __str__(self):
        return ("!" if self.neg else "") + f"{self.kind}({self.f}) on {self.interval}"


@dataclass(frozen=True)
class DBound:
    f: str
    op: str
    bound: str
    interval: FInterval
    neg: bool = False

    def __str__(self):
        return ("!" if self.neg else "") + f"(D[{self.f}] {self.op} {self.bound}) on {self.interval}"


INTERVAL_LITS = (FEq, FGt, Shape, DBound)
FUNCTION_LITS = (ValueLit, SlopeLit) + INTERVAL_LITS


def literal_functions(lit) -> set:
    if isinstance(lit, (FEq, FGt)):
        return {lit.f, lit.g}
    if isinstance(lit, FUNCTION_LITS):
        return {lit.f}
    return set()


def literal_domain_vars(lit) -> list:
    if isinstance(lit, (ValueLit, SlopeLit)):
        return [lit.x]
    if isinstance(lit, INTERVAL_LITS):
        return lit.interval.ends()
    return []


def domain_vars(literals) -> list:
    seen = {}
    for lit in literals:
        for v in literal_domain_vars(lit):
            seen.setdefault(v, None)
    return list(seen)


def render_literal(lit) -> str:
    from .tarski import render_tarski
    if isinstance(lit, FUNCTION_LITS):
        return str(lit)
    return render_tarski(lit)


# ---------------------------------------------------------------- renaming

def _rename_term(t, ren):
    if isinstance(t, Var):
        return Var(ren.get(t.name, t.name))
    if isinstance(t, (Add, Sub, Mul)):
        return type(t)(_rename_term(t.left, ren), _rename_term(t.right, ren))
    from .syntax import Div
    if isinstance(t, Div):
        return Div(_rename_term(t.num, ren), _rename_term(t.den, ren))
    return t


def rename(lit, ren: dict):
    """Apply a variable renaming to a flat or arithmetic literal."""
    if not ren:
        return lit
    r = lambda v: ren.get(v, v)
    if isinstance(lit, (ValueLit, SlopeLit)):
        return type(lit)(r(lit.z), lit.f, r(lit.x))
    if isinstance(lit, INTERVAL_LITS):
        a = lit.interval
        lit = replace(lit, interval=FInterval(r(a.lo), r(a.hi), a.lo_closed, a.hi_closed))
        if isinstance(lit, DBound):
            lit = replace(lit, bound=r(lit.bound))
        return lit
    if isinstance(lit, TAtom):
        return TAtom(lit.rel, _rename_term(lit.lhs, ren), _rename_term(lit.rhs, ren))
    if isinstance(lit, (TAnd, TOr)):
        return type(lit)(tuple(rename(a, ren) for a in lit.args))
    if isinstance(lit, TNot):
        return TNot(rename(lit.arg, ren))
    if isinstance(lit, TImplies):
        return TImplies(rename(lit.left, ren), rename(lit.right, ren))
    raise TypeError(lit)


# ---------------------------------------------------------------- flattening

class _Flattener:
    def __init__(self, fresh: Fresh):
        self.fresh = fresh
        self.memo = {}
        self.out = []

    def name(self, t) -> str:
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Const0):
            return "0"
        if isinstance(t, Const1):
            return "1"
        if t in self.memo:
            return self.memo[t]
        if isinstance(t, (Add, Mul)):
            x, y = self.name(t.left), self.name(t.right)
            z = self.fresh()
            self.out.append(atom("=", z, (Add if isinstance(t, Add) else Mul)(term_of(x), term_of(y))))
        elif isinstance(t, Sub):
            # z = x - y written as x = z + y
            x, y = self.name(t.left), self.name(t.right)
            z = self.fresh()
            self.out.append(atom("=", x, Add(term_of(z), term_of(y))))
        elif isinstance(t, (Apply, DApply)):
            x = self.var(t.arg)
            z = self.fresh()
            self.out.append((ValueLit if isinstance(t, Apply) else SlopeLit)(z, t.fn, x))
        else:
            raise TypeError(f"cannot flatten {t!r}; expand derived forms first")
        self.memo[t] = z
        return z

    def var(self, t) -> str:
        """Like name, but constants are also bound to a variable (domain positions)."""
        x = self.name(t)
        if x in ("0", "1"):
            key = ("const", x)
            if key not in self.memo:
                w = self.fresh()
                self.out.append(atom("=", w, x))
                self.memo[key] = w
            x = self.memo[key]
        return x

    def defines(self, z, t) -> bool:
        """z = f(x), z = x + y or z = x * y over names is already flat."""
        if not isinstance(z, Var) or t in self.memo:
            return False
        if isinstance(t, (Apply, DApply)) and isinstance(t.arg, Var):
            self.out.append((ValueLit if isinstance(t, Apply) else SlopeLit)(z.name, t.fn, t.arg.name))
        elif isinstance(t, (Add, Mul)) and all(isinstance(u, (Var, Const0, Const1)) for u in (t.left, t.right)):
            self.out.append(atom("=", z.name, t))
        else:
            return False
        self.memo[t] = z.name
        return True

    def interval(self, a) -> FInterval:
        lo = NEG if isinstance(a.lo, NegInf) else self.var(a.lo)
        hi = POS if isinstance(a.hi, PosInf) else self.var(a.hi)
        return FInterval(lo, hi, a.lo_closed, a.hi_closed)

    def literal(self, lit):
        neg = isinstance(lit, Not)
        a = lit.arg if neg else lit
        if isinstance(a, (NumEq, NumGt)):
            if neg:
                raise ValueError("negated arithmetic atoms are rewritten before flattening")
            if isinstance(a, NumEq) and self.defines(a.lhs, a.rhs):
                return
            self.out.append(atom("=" if isinstance(a, NumEq) else ">", self.name(a.lhs), self.name(a.rhs)))
        elif isinstance(a, FunEq):
            self.out.append(FEq(a.f, a.g, self.interval(a.interval), neg))
        elif isinstance(a, FunGt):
            self.out.append(FGt(a.f, a.g, self.interval(a.interval), neg))
        elif isinstance(a, Pred):
            self.out.append(Shape(a.kind, a.f, self.interval(a.interval), neg))
        elif isinstance(a, DerivCmp):
            self.out.append(DBound(a.f, a.op, self.name(a.bound), self.interval(a.interval), neg))
        else:
            raise TypeError(f"not a primitive literal: {lit!r}")


def flatten(conjunction, fresh: Fresh | None = None) -> list:
    """Flat literals equisatisfiable with a conjunction of primitive literals."""
    if fresh is None:
        fresh = Fresh(set().union(*(variables(lit) for lit in conjunction)))
    fl = _Flattener(fresh)
    for lit in conjunction:
        fl.literal(lit)
    out, seen = [], set()
    for lit in fl.out:
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return out


# ---------------------------------------------------------------- DNF

def _nnf_literals(phi, positive):
    """Yield the DNF of phi (or of its negation) as a list of literal lists."""
    if isinstance(phi, Not):
        return _nnf_literals(phi.arg, not positive)
    if isinstance(phi, And) and positive or isinstance(phi, Or) and not positive:
        return _product([_nnf_literals(a, positive) for a in phi.args])
    if isinstance(phi, Or) and positive or isinstance(phi, And) and not positive:
        out = []
        for a in phi.args:
            out.extend(_nnf_literals(a, positive))
        return out
    if isinstance(phi, Implies):
        return _nnf_literals(Or((Not(phi.left), phi.right)), positive)
    if isinstance(phi, Iff):
        both = And((phi.left, phi.right))
        neither = And((Not(phi.left), Not(phi.right)))
        return _nnf_literals(Or((both, neither)), positive)
    if positive:
        return [[phi]]
    if isinstance(phi, NumGt):
        return [[NumGt(phi.rhs, phi.lhs)], [NumEq(phi.lhs, phi.rhs)]]
    if isinstance(phi, NumEq):
        return [[NumGt(phi.lhs, phi.rhs)], [NumGt(phi.rhs, phi.lhs)]]
    return [[Not(phi)]]


def _product(parts):
    out = [[]]
    for p in parts:
        out = [a + b for a in out for b in p]
    return out


def to_dnf(phi) -> list:
    """Disjunction of conjunctions (lists of literals) equivalent to phi.

    Literals are positive arithmetic atoms or possibly negated function atoms.
    """
    out, seen = [], set()
    for c in _nnf_literals(phi, True):
        lits = list(dict.fromkeys(c))
        key = frozenset(lits)
        if key not in seen:
            seen.add(key)
            out.append(lits)
    return out


# ---------------------------------------------------------------- ordering

@dataclass
class OrderedConjunction:
    body: list
    chain: list
    merged: dict = field(default_factory=dict)

    def __post_init__(self):
        dv = set(domain_vars(self.body))
        if len(set(self.chain)) != len(self.chain) or not dv <= set(self.chain):
            raise ValueError("chain must list every domain variable exactly once")

    def chain_literals(self):
        return [atom(">", b, a) for a, b in zip(self.chain, self.chain[1:])]

    @property
    def literals(self):
        return self.body + self.chain_literals()


def _order_constraints(literals, dvars):
    dv = set(dvars)
    out = []
    for lit in literals:
        if isinstance(lit, TAtom) and isinstance(lit.lhs, Var) and isinstance(lit.rhs, Var):
            if lit.lhs.name in dv and lit.rhs.name in dv:
                out.append((lit.rel, lit.lhs.name, lit.rhs.name))
    return out


_CMP = {"=": lambda a, b: a == b, "!=": lambda a, b: a != b, "<": lambda a, b: a < b,
        ">": lambda a, b: a > b, "<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b}


def _weak_orders(items, fixed, constraints):
    """Ordered partitions of fixed + items in which the fixed names keep their
    relative strict order and every constraint holds."""
    by_var = {}
    for c in constraints:
        by_var.setdefault(c[1], []).append(c)
        by_var.setdefault(c[2], []).append(c)

    def ok(blocks, placed):
        pos = {v: i for i, b in enumerate(blocks) for v in b}
        for rel, a, b in by_var.get(placed, ()):
            if a in pos and b in pos and not _CMP[rel](pos[a], pos[b]):
                return False
        return True

    start = [[v] for v in fixed]
    for v in fixed:
        if not ok(start, v):
            return

    def rec(blocks, k):
        if k == len(items):
            yield [list(b) for b in blocks]
            return
        v = items[k]
        for i in range(len(blocks)):
            cand = [b + [v] if j == i else b for j, b in enumerate(blocks)]
            if ok(cand, v):
                yield from rec(cand, k + 1)
        for i in range(len(blocks) + 1):
            cand = blocks[:i] + [[v]] + blocks[i:]
            if ok(cand, v):
                yield from rec(cand, k + 1)

    yield from rec(start, 0)


def _representative(block, fixed):
    for v in block:
        if v in fixed:
            return v
    user = [v for v in block if not v.startswith("_")]
    return (user or block)[0]


def enumerate_orderings(literals, cap=8, chain=None, merged=None) -> list:
    """One OrderedConjunction per weak order of the domain variables.

    Variables sharing a block are merged into one representative.  With a
    given chain, its members stay strictly ordered and only the remaining
    domain variables are placed (the cap then bounds the number of placed
    variables).
    """
    fixed = list(chain or [])
    dvars = domain_vars(literals)
    items = [v for v in dvars if v not in fixed]
    if len(items) > cap:
        raise BranchExplosion(f"{len(items)} domain variables exceed the cap of {cap}")
    constraints = _order_constraints(literals, dvars + fixed)
    out = []
    for blocks in _weak_orders(items, fixed, constraints):
        ren = {}
        new_chain = []
        for b in blocks:
            rep = _representative(b, fixed)
            new_chain.append(rep)
            for v in b:
                if v != rep:
                    ren[v] = rep
        body = []
        for lit in literals:
            lit = rename(lit, ren)
            if lit not in body:
                body.append(lit)
        m = dict(merged or {})
        for k, v in list(m.items()):
            m[k] = ren.get(v, v)
        m.update(ren)
        out.append(OrderedConjunction(body, new_chain, m))
    return out
