"""Function-free arithmetic formulas, polynomial normal form and exact evaluation."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .syntax import Add, Const0, Const1, Div, Mul, Num, Sub, Var


RELS = ("=", "!=", "<", ">", "<=", ">=")
FLIP = {"=": "=", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}
NEGATE = {"=": "!=", "!=": "=", "<": ">=", ">": "<=", "<=": ">", ">=": "<"}


@dataclass(frozen=True)
class TAtom:
    """lhs rel rhs over arithmetic terms (Var, 0, 1, +, -, *, and division)."""
    rel: str
    lhs: object
    rhs: object

    def __post_init__(self):
        if self.rel not in RELS:
            raise ValueError(self.rel)


@dataclass(frozen=True)
class TAnd:
    args: tuple


@dataclass(frozen=True)
class TOr:
    args: tuple


@dataclass(frozen=True)
class TNot:
    arg: object


@dataclass(frozen=True)
class TImplies:
    left: object
    right: object


TRUE = TAnd(())
FALSE = TOr(())


def term_of(x):
    """Operand string ("0", "1" or a variable name) to an arithmetic term."""
    if isinstance(x, str):
        if x == "0":
            return Const0()
        if x == "1":
            return Const1()
        return Var(x)
    return x


def atom(rel, lhs, rhs) -> TAtom:
    return TAtom(rel, term_of(lhs), term_of(rhs))


# ---------------------------------------------------------------- polynomials

class Poly:
    """Sparse polynomial with rational coefficients; monomials are sorted
    tuples of (variable, exponent)."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    @staticmethod
    def const(c):
        return Poly({(): Fraction(c)})

    @staticmethod
    def var(name):
        return Poly({((name, 1),): Fraction(1)})

    def __add__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                exps = dict(m1)
                for v, e in m2:
                    exps[v] = exps.get(v, 0) + e
                m = tuple(sorted(exps.items()))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def constant(self):
        """The value if the polynomial is constant, else None."""
        if not self.terms:
            return Fraction(0)
        if list(self.terms) == [()]:
            return self.terms[()]
        return None

    def variables(self):
        return {v for m in self.terms for v, _ in m}

    def evaluate(self, values):
        total = Fraction(0)
        for m, c in self.terms.items():
            p = c
            for v, e in m:
                p *= values[v] ** e
            total += p
        return total

    def integer_scaled(self):
        """Positive multiple with integer coefficients."""
        k = lcm(*[c.denominator for c in self.terms.values()]) if self.terms else 1
        return Poly({m: c * k for m, c in self.terms.items()})

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: (-sum(e for _, e in mc[0]), mc[0]))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
            parts.append(f"{c}" if not m else (mono if c == 1 else f"{c}*{mono}"))
        return " + ".join(parts)


def poly_of(t) -> Poly:
    """Polynomial of a division-free term."""
    if isinstance(t, Var):
        return Poly.var(t.name)
    if isinstance(t, Const0):
        return Poly.const(0)
    if isinstance(t, Const1):
        return Poly.const(1)
    if isinstance(t, Num):
        return Poly.const(t.value)
    if isinstance(t, Add):
        return poly_of(t.left) + poly_of(t.right)
    if isinstance(t, Sub):
        return poly_of(t.left) - poly_of(t.right)
    if isinstance(t, Mul):
        return poly_of(t.left) * poly_of(t.right)
    raise TypeError(f"not a polynomial term: {t!r}")


def fraction_of(t):
    """(numerator, [denominator factors]) of a term possibly containing divisions."""
    if isinstance(t, Div):
        n1, d1 = fraction_of(t.num)
        n2, d2 = fraction_of(t.den)
        # (n1/D1) / (n2/D2) = n1*D2 / (D1*n2)
        num = n1
        for d in d2:
            num = num * d
        return num, d1 + [n2]
    if isinstance(t, (Add, Sub)):
        n1, d1 = fraction_of(t.left)
        n2, d2 = fraction_of(t.right)
        a, b = n1, n2
        for d in d2:
            a = a * d
        for d in d1:
            b = b * d
        return (a + b if isinstance(t, Add) else a - b), d1 + d2
    if isinstance(t, Mul):
        n1, d1 = fraction_of(t.left)
        n2, d2 = fraction_of(t.right)
        return n1 * n2, d1 + d2
    return poly_of(t), []


@dataclass(frozen=True)
class PolyAtom:
    """poly rel 0 with canonical integer coefficients."""
    poly: Poly
    rel: str

    @staticmethod
    def make(poly: Poly, rel: str) -> "PolyAtom":
        return PolyAtom(poly.integer_scaled(), rel)


def compare(value: Fraction, rel: str) -> bool:
    return {"=": value == 0, "!=": value != 0, "<": value < 0, ">": value > 0,
            "<=": value <= 0, ">=": value >= 0}[rel]


# ---------------------------------------------------------------- traversal

def free_vars(phi) -> set:
    if isinstance(phi, TAtom):
        out = set()
        for side in (phi.lhs, phi.rhs):
            out |= _term_vars(side)
        return out
    if isinstance(phi, PolyAtom):
        return phi.poly.variables()
    if isinstance(phi, (TAnd, TOr)):
        out = set()
        for a in phi.args:
            out |= free_vars(a)
        return out
    if isinstance(phi, TNot):
        return free_vars(phi.arg)
    if isinstance(phi, TImplies):
        return free_vars(phi.left) | free_vars(phi.right)
    raise TypeError(phi)


def _term_vars(t) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, (Add, Sub, Mul)):
        return _term_vars(t.left) | _term_vars(t.right)
    if isinstance(t, Div):
        return _term_vars(t.num) | _term_vars(t.den)
    return set()


def has_division(phi) -> bool:
    if isinstance(phi, TAtom):
        return _has_div(phi.lhs) or _has_div(phi.rhs)
    if isinstance(phi, PolyAtom):
        return False
    if isinstance(phi, (TAnd, TOr)):
        return any(has_division(a) for a in phi.args)
    if isinstance(phi, TNot):
        return has_division(phi.arg)
    return has_division(phi.left) or has_division(phi.right)


def _has_div(t) -> bool:
    if isinstance(t, Div):
        return True
    if isinstance(t, (Add, Sub, Mul)):
        return _has_div(t.left) or _has_div(t.right)
    return False


def conjuncts(phi) -> list:
    if isinstance(phi, TAnd):
        out = []
        for a in phi.args:
            out.extend(conjuncts(a))
        return out
    return [phi]


# ---------------------------------------------------------------- evaluation

class MissingVariable(KeyError):
    pass


def _eval_term(t, values):
    if isinstance(t, Var):
        if t.name not in values:
            raise MissingVariable(t.name)
        return Fraction(values[t.name])
    if isinstance(t, Const0):
        return Fraction(0)
    if isinstance(t, Const1):
        return Fraction(1)
    if isinstance(t, Num):
        return Fraction(t.value)
    if isinstance(t, Add):
        return _eval_term(t.left, values) + _eval_term(t.right, values)
    if isinstance(t, Sub):
        return _eval_term(t.left, values) - _eval_term(t.right, values)
    if isinstance(t, Mul):
        return _eval_term(t.left, values) * _eval_term(t.right, values)
    if isinstance(t, Div):
        d = _eval_term(t.den, values)
        if d == 0:
            raise ZeroDivisionError
        return _eval_term(t.num, values) / d
    raise TypeError(t)


eval_term = _eval_term


def eval_tarski(phi, model) -> bool:
    """Exact truth value of phi; an atom with a zero divisor is false."""
    values = getattr(model, "assignment", model)
    if isinstance(phi, TAtom):
        try:
            diff = _eval_term(phi.lhs, values) - _eval_term(phi.rhs, values)
        except ZeroDivisionError:
            _check_vars(phi, values)
            return False
        return compare(diff, phi.rel)
    if isinstance(phi, PolyAtom):
        missing = phi.poly.variables() - set(values)
        if missing:
            raise MissingVariable(sorted(missing)[0])
        return compare(phi.poly.evaluate({k: Fraction(v) for k, v in values.items()}), phi.rel)
    if isinstance(phi, TAnd):
        return all([eval_tarski(a, values) for a in phi.args])
    if isinstance(phi, TOr):
        return any([eval_tarski(a, values) for a in phi.args])
    if isinstance(phi, TNot):
        return not eval_tarski(phi.arg, values)
    if isinstance(phi, TImplies):
        left = eval_tarski(phi.left, values)
        right = eval_tarski(phi.right, values)
        return (not left) or right
    raise TypeError(phi)


def _check_vars(phi, values):
    missing = free_vars(phi) - set(values)
    if missing:
        raise MissingVariable(sorted(missing)[0])


def atom_margin(phi, values) -> float:
    """Signed slack of a comparison atom (positive when comfortably true)."""
    diff = float(_eval_term(phi.lhs, values) - _eval_term(phi.rhs, values))
    return {"=": -abs(diff), "!=": abs(diff), "<": -diff, ">": diff,
            "<=": -diff, ">=": diff}[phi.rel]


# ---------------------------------------------------------------- division clearing

class UnknownSignDenominator(ValueError):
    pass


def clear_divisions(phi, known_positive=(), allow_product=True):
    """Replace every atom by polynomial atoms.

    A denominator factor listed in known_positive (as a term or Poly) is
    multiplied through.  Any other factor D is handled by the product
    encoding N*D rel 0 together with D*D > 0.
    """
    positive = {p if isinstance(p, Poly) else poly_of(p) for p in known_positive}
    return _clear(phi, positive, allow_product)


def _clear(phi, positive, allow_product):
    if isinstance(phi, PolyAtom):
        return phi
    if isinstance(phi, TAtom):
        n1, d1 = fraction_of(phi.lhs)
        n2, d2 = fraction_of(phi.rhs)
        a, b = n1, n2
        for d in d2:
            a = a * d
        for d in d1:
            b = b * d
        num, dens = a - b, d1 + d2
        unknown = []
        for d in dens:
            if d in positive or (d.constant() is not None and d.constant() > 0):
                continue
            if d.constant() is not None and d.constant() < 0:
                num = -num
                continue
            unknown.append(d)
        if not unknown:
            return _rel_atom(num, phi.rel)
        if not allow_product:
            raise UnknownSignDenominator(repr(unknown[0]))
        den = Poly.const(1)
        for d in unknown:
            den = den * d
        return TAnd((_rel_atom(num * den, phi.rel), PolyAtom.make(den * den, ">")))
    if isinstance(phi, TAnd):
        return TAnd(tuple(_clear(a, positive, allow_product) for a in phi.args))
    if isinstance(phi, TOr):
        return TOr(tuple(_clear(a, positive, allow_product) for a in phi.args))
    if isinstance(phi, TNot):
        return TNot(_clear(phi.arg, positive, allow_product))
    if isinstance(phi, TImplies):
        return TImplies(_clear(phi.left, positive, allow_product),
                        _clear(phi.right, positive, allow_product))
    raise TypeError(phi)


def _rel_atom(poly: Poly, rel: str):
    if rel == "!=":
        return TOr((PolyAtom.make(poly, ">"), PolyAtom.make(poly, "<")))
    return PolyAtom.make(poly, rel)


def render_tarski(phi) -> str:
    from .parser import render_term
    if isinstance(phi, TAtom):
        return f"{render_term(phi.lhs)} {phi.rel} {render_term(phi.rhs)}"
    if isinstance(phi, PolyAtom):
        return f"{phi.poly!r} {phi.rel} 0"
    if isinstance(phi, TAnd):
        return "(" + " & ".join(render_tarski(a) for a in phi.args) + ")" if phi.args else "true"
    if isinstance(phi, TOr):
        return "(" + " | ".join(render_tarski(a) for a in phi.args) + ")" if phi.args else "false"
    if isinstance(phi, TNot):
        return "!(" + render_tarski(phi.arg) + ")"
    return f"({render_tarski(phi.left)} -> {render_tarski(phi.right)})"
