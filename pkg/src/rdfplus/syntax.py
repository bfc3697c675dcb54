"""Abstract syntax for formulas over reals and C1 function variables.

Terms, interval specs, atoms and boolean formulas are frozen dataclasses, so
they compare structurally and can be hashed and shared freely.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable


# ---------------------------------------------------------------- terms

class Term:
    pass


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const0(Term):
    pass


@dataclass(frozen=True)
class Const1(Term):
    pass


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Apply(Term):
    fn: str
    arg: Term


@dataclass(frozen=True)
class DApply(Term):
    fn: str
    arg: Term


# surface sugar, removed by expand_derived

@dataclass(frozen=True)
class Num(Term):
    value: Fraction


@dataclass(frozen=True)
class Div(Term):
    num: Term
    den: Term


ZERO = Const0()
ONE = Const1()


# ---------------------------------------------------------------- intervals

@dataclass(frozen=True)
class NegInf:
    pass


@dataclass(frozen=True)
class PosInf:
    pass


NEG_INF = NegInf()
POS_INF = PosInf()


@dataclass(frozen=True)
class Interval:
    lo: object
    hi: object
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if isinstance(self.lo, PosInf) or isinstance(self.hi, NegInf):
            raise ValueError("-inf may only be a left end and +inf only a right end")
        if isinstance(self.lo, NegInf) and self.lo_closed:
            raise ValueError("an infinite end cannot be closed")
        if isinstance(self.hi, PosInf) and self.hi_closed:
            raise ValueError("an infinite end cannot be closed")

    @property
    def lo_inf(self) -> bool:
        return isinstance(self.lo, NegInf)

    @property
    def hi_inf(self) -> bool:
        return isinstance(self.hi, PosInf)

    def closed(self) -> "Interval":
        """Same ends, every finite end closed."""
        return replace(self, lo_closed=not self.lo_inf, hi_closed=not self.hi_inf)


def interval(lo, hi, lo_closed=True, hi_closed=True) -> Interval:
    """Build an interval, forcing infinite ends open."""
    if isinstance(lo, NegInf):
        lo_closed = False
    if isinstance(hi, PosInf):
        hi_closed = False
    return Interval(lo, hi, lo_closed, hi_closed)


# ---------------------------------------------------------------- atoms

class Atom:
    pass


@dataclass(frozen=True)
class NumEq(Atom):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class NumGt(Atom):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class NumRel(Atom):
    """Derived comparison: op is one of != < <= >=."""
    op: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class FunEq(Atom):
    f: str
    g: str
    interval: Interval


@dataclass(frozen=True)
class FunGt(Atom):
    f: str
    g: str
    interval: Interval


SHAPE_KINDS = ("StrictUp", "StrictDown", "Convex", "StrictConvex", "Concave", "StrictConcave")
DERIVED_KINDS = ("Up", "Down", "Constant", "Linear", "Affine")


@dataclass(frozen=True)
class Pred(Atom):
    kind: str
    f: str
    interval: Interval

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS + DERIVED_KINDS:
            raise ValueError(f"unknown predicate {self.kind}")


@dataclass(frozen=True)
class PointMono(Atom):
    """Up(f, s)_A or Down(f, s)_A."""
    kind: str
    f: str
    point: Term
    interval: Interval


DERIV_OPS = ("=", "<", ">", "<=", ">=")


@dataclass(frozen=True)
class DerivCmp(Atom):
    f: str
    op: str
    bound: Term
    interval: Interval

    def __post_init__(self):
        if self.op not in DERIV_OPS + ("!=",):
            raise ValueError(f"bad derivative comparison {self.op}")


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Iff:
    left: object
    right: object


def conj(items: Iterable) -> object:
    items = tuple(items)
    return items[0] if len(items) == 1 else And(items)


def disj(items: Iterable) -> object:
    items = tuple(items)
    return items[0] if len(items) == 1 else Or(items)


FUNCTION_ATOMS = (FunEq, FunGt, Pred, DerivCmp)


# ---------------------------------------------------------------- traversal

def map_term(t: Term, fn: Callable[[Term], Term]) -> Term:
    """Rebuild t bottom-up, applying fn to every node."""
    if isinstance(t, (Add, Sub, Mul)):
        t = type(t)(map_term(t.left, fn), map_term(t.right, fn))
    elif isinstance(t, (Apply, DApply)):
        t = type(t)(t.fn, map_term(t.arg, fn))
    elif isinstance(t, Div):
        t = Div(map_term(t.num, fn), map_term(t.den, fn))
    return fn(t)


def _map_end(e, fn):
    return e if isinstance(e, (NegInf, PosInf)) else map_term(e, fn)


def _map_interval(a: Interval, fn) -> Interval:
    return Interval(_map_end(a.lo, fn), _map_end(a.hi, fn), a.lo_closed, a.hi_closed)


def map_atom_terms(atom: Atom, fn) -> Atom:
    if isinstance(atom, (NumEq, NumGt)):
        return type(atom)(map_term(atom.lhs, fn), map_term(atom.rhs, fn))
    if isinstance(atom, NumRel):
        return NumRel(atom.op, map_term(atom.lhs, fn), map_term(atom.rhs, fn))
    if isinstance(atom, (FunEq, FunGt)):
        return type(atom)(atom.f, atom.g, _map_interval(atom.interval, fn))
    if isinstance(atom, Pred):
        return Pred(atom.kind, atom.f, _map_interval(atom.interval, fn))
    if isinstance(atom, PointMono):
        return PointMono(atom.kind, atom.f, map_term(atom.point, fn), _map_interval(atom.interval, fn))
    if isinstance(atom, DerivCmp):
        return DerivCmp(atom.f, atom.op, map_term(atom.bound, fn), _map_interval(atom.interval, fn))
    raise TypeError(atom)


def map_atoms(phi, fn):
    """Rebuild a formula, replacing each atom a by fn(a)."""
    if isinstance(phi, Not):
        return Not(map_atoms(phi.arg, fn))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(map_atoms(a, fn) for a in phi.args))
    if isinstance(phi, (Implies, Iff)):
        return type(phi)(map_atoms(phi.left, fn), map_atoms(phi.right, fn))
    return fn(phi)


def atoms(phi):
    if isinstance(phi, Not):
        yield from atoms(phi.arg)
    elif isinstance(phi, (And, Or)):
        for a in phi.args:
            yield from atoms(a)
    elif isinstance(phi, (Implies, Iff)):
        yield from atoms(phi.left)
        yield from atoms(phi.right)
    else:
        yield phi


def subterms(t: Term):
    yield t
    if isinstance(t, (Add, Sub, Mul)):
        yield from subterms(t.left)
        yield from subterms(t.right)
    elif isinstance(t, (Apply, DApply)):
        yield from subterms(t.arg)
    elif isinstance(t, Div):
        yield from subterms(t.num)
        yield from subterms(t.den)


def _interval_ends(a: Interval):
    return [e for e in (a.lo, a.hi) if not isinstance(e, (NegInf, PosInf))]


def atom_terms(atom: Atom) -> list:
    """Top-level term positions of an atom, interval ends included."""
    if isinstance(atom, (NumEq, NumGt, NumRel)):
        return [atom.lhs, atom.rhs]
    out = []
    if isinstance(atom, PointMono):
        out.append(atom.point)
    if isinstance(atom, DerivCmp):
        out.append(atom.bound)
    return out + _interval_ends(atom.interval)


def variables(phi) -> set:
    out = set()
    for a in atoms(phi):
        for t in atom_terms(a):
            out.update(s.name for s in subterms(t) if isinstance(s, Var))
    return out


def function_vars(phi) -> set:
    out = set()
    for a in atoms(phi):
        if isinstance(a, (FunEq, FunGt)):
            out.update((a.f, a.g))
        elif isinstance(a, (Pred, PointMono, DerivCmp)):
            out.add(a.f)
        for t in atom_terms(a):
            out.update(s.fn for s in subterms(t) if isinstance(s, (Apply, DApply)))
    return out


def collect_domain_vars(phi) -> list:
    """Variables used as function arguments or as interval ends, in order of
    first occurrence."""
    seen = {}

    def note(t):
        if isinstance(t, Var):
            seen.setdefault(t.name, None)

    for a in atoms(phi):
        if hasattr(a, "interval"):
            for e in _interval_ends(a.interval):
                note(e)
        for t in atom_terms(a):
            for s in subterms(t):
                if isinstance(s, (Apply, DApply)):
                    note(s.arg)
    return list(seen)


def substitute_var(phi, old: str, new: str):
    def fn(t):
        return Var(new) if isinstance(t, Var) and t.name == old else t
    return map_atoms(phi, lambda a: map_atom_terms(a, fn))


# ---------------------------------------------------------------- fresh names

FRESH_RE = re.compile(r"^_t(\d+)$")


class Fresh:
    """Generator of reserved names _t<N>, starting past any already in use."""

    def __init__(self, used: Iterable[str] = ()):
        start = 0
        for name in used:
            m = FRESH_RE.match(name)
            if m:
                start = max(start, int(m.group(1)) + 1)
        self._counter = itertools.count(start)

    def __call__(self) -> str:
        return f"_t{next(self._counter)}"


# ---------------------------------------------------------------- derived forms

def integer_term(n: int) -> Term:
    """n as a term over 0, 1, + and * (binary expansion keeps it small)."""
    if n < 0:
        return Sub(ZERO, integer_term(-n))
    if n == 0:
        return ZERO
    if n == 1:
        return ONE
    two = Add(ONE, ONE)
    half = integer_term(n // 2)
    t = two if n // 2 == 1 else Mul(two, half)
    return Add(t, ONE) if n % 2 else t


def _eq_div(s, d: Div):
    # s = n/d
    return And((NumEq(d.num, Mul(s, d.den)), NumGt(Mul(d.den, d.den), ZERO)))


def _gt(a, b):
    """a > b where at most one side is a division."""
    if isinstance(b, Div):
        n, d = b.num, b.den
        return Or((And((NumGt(Mul(a, d), n), NumGt(d, ZERO))),
                   And((NumGt(n, Mul(a, d)), NumGt(ZERO, d)))))
    if isinstance(a, Div):
        n, d = a.num, a.den
        return Or((And((NumGt(n, Mul(b, d)), NumGt(d, ZERO))),
                   And((NumGt(Mul(b, d), n), NumGt(ZERO, d)))))
    return NumGt(a, b)


def _eq(a, b):
    if isinstance(b, Div):
        return _eq_div(a, b)
    if isinstance(a, Div):
        return _eq_div(b, a)
    return NumEq(a, b)


def _relation(op, a, b):
    if op == "=":
        return _eq(a, b)
    if op == ">":
        return _gt(a, b)
    if op == "<":
        return _gt(b, a)
    if op == "!=":
        return Or((_gt(a, b), _gt(b, a)))
    if op == ">=":
        return Or((_gt(a, b), _eq(a, b)))
    if op == "<=":
        return Or((_gt(b, a), _eq(a, b)))
    raise ValueError(op)


def _ends_equal(a: Interval):
    if a.lo_inf or a.hi_inf:
        return None
    return NumEq(a.lo, a.hi)


def _expand_atom(atom):
    if isinstance(atom, NumEq):
        return _relation("=", atom.lhs, atom.rhs)
    if isinstance(atom, NumGt):
        return _relation(">", atom.lhs, atom.rhs)
    if isinstance(atom, NumRel):
        return _relation(atom.op, atom.lhs, atom.rhs)
    if isinstance(atom, DerivCmp) and atom.op == "!=":
        return Or((DerivCmp(atom.f, "<", atom.bound, atom.interval),
                   DerivCmp(atom.f, ">", atom.bound, atom.interval)))
    if isinstance(atom, Pred) and atom.kind in DERIVED_KINDS:
        a, f = atom.interval, atom.f
        if atom.kind in ("Up", "Down"):
            d = DerivCmp(f, ">=" if atom.kind == "Up" else "<=", ZERO, a)
            same = _ends_equal(a)
            return d if same is None else Or((d, same))
        constant = DerivCmp(f, "=", ZERO, a)
        linear = And((Pred("Concave", f, a), Pred("Convex", f, a)))
        if atom.kind == "Constant":
            return constant
        if atom.kind == "Linear":
            return linear
        return Or((constant, linear))
    if isinstance(atom, PointMono):
        a, s = atom.interval, atom.point
        parts = [_relation(">=" if atom.kind == "Up" else "<=", DApply(atom.f, s), ZERO)]
        if not a.lo_inf:
            parts.append(NumGt(s, a.lo))
        if not a.hi_inf:
            parts.append(NumGt(a.hi, s))
        return conj(parts)
    return atom


def _negate_primitive(phi):
    # footnote rule: not(x > y) becomes x < y or x = y, not(x = y) becomes x > y or y > x
    if isinstance(phi, Not) and isinstance(phi.arg, NumGt):
        return Or((NumGt(phi.arg.rhs, phi.arg.lhs), NumEq(phi.arg.lhs, phi.arg.rhs)))
    if isinstance(phi, Not) and isinstance(phi.arg, NumEq):
        return Or((NumGt(phi.arg.lhs, phi.arg.rhs), NumGt(phi.arg.rhs, phi.arg.lhs)))
    return phi


def _post(phi):
    if isinstance(phi, Not):
        return _negate_primitive(Not(_post(phi.arg)))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(_post(a) for a in phi.args))
    if isinstance(phi, (Implies, Iff)):
        return type(phi)(_post(phi.left), _post(phi.right))
    return phi


def expand_derived(phi, fresh: Fresh | None = None):
    """Rewrite every derived relator, numeric literal and division into
    primitive atoms.

    Integer literals become sums and products of 1.  A non-integer rational
    p/q is named by a fresh variable h defined by q*h = p; since h is uniquely
    determined, the definition is conjoined at top level regardless of
    polarity.
    """
    if fresh is None:
        fresh = Fresh(variables(phi))
    rationals: dict = {}

    def lower(t):
        if isinstance(t, Num):
            v = Fraction(t.value)
            if v.denominator == 1:
                return integer_term(v.numerator)
            if v not in rationals:
                rationals[v] = fresh()
            return Var(rationals[v])
        return t

    phi = map_atoms(phi, lambda a: map_atom_terms(a, lower))
    phi = _post(map_atoms(phi, _expand_atom))
    defs = [NumEq(Mul(integer_term(v.denominator), Var(h)), integer_term(v.numerator))
            for v, h in rationals.items()]
    return conj(defs + [phi]) if defs else phi


def is_primitive(phi) -> bool:
    for a in atoms(phi):
        if isinstance(a, NumRel) or isinstance(a, PointMono):
            return False
        if isinstance(a, Pred) and a.kind in DERIVED_KINDS:
            return False
        if isinstance(a, DerivCmp) and a.op == "!=":
            return False
        for t in atom_terms(a):
            if any(isinstance(s, (Num, Div)) for s in subterms(t)):
                return False
    return True
