"""Text syntax for formulas and a canonical printer.

    formula := iff ; iff := imp ('<->' imp)* ; imp := or ('->' imp)?
    or := and ('|' and)* ; and := not ('&' not)*
    not := '!' not | '(' formula ')' | atom
    atom := term cmp side | Pred '(' f [',' g|term] ')' 'on' interval
          | '(' 'D[' f ']' cmp side ')' 'on' interval
    side := term ['/' term]

Intervals are written [a,b], [a,b), (a,b], (a,b); the reversed-bracket
spelling ]a,b] is accepted too.  Division may only divide a whole side of a
comparison.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .syntax import (
    Add, And, Apply, Const0, Const1, DApply, DerivCmp, Div, FunEq, FunGt, Iff,
    Implies, Interval, Mul, NEG_INF, NegInf, Not, Num, NumEq, NumGt, NumRel, Or,
    POS_INF, PointMono, PosInf, Pred, SHAPE_KINDS, DERIVED_KINDS, Sub, Var, ONE, ZERO,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


class ParseError(Exception):
    def __init__(self, message, span: SourceSpan, expected=()):
        super().__init__(f"{message} at {span.start}")
        self.span = span
        self.expected = frozenset(expected)


class ArityError(ParseError):
    pass


PRED_NAMES = set(SHAPE_KINDS) | set(DERIVED_KINDS) | {"Eq", "Gt"}
KEYWORDS = PRED_NAMES | {"on", "inf", "D"}
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")

TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><->|->|<=|>=|!=|[=<>!&|+\-*/()\[\],])
""", re.VERBOSE)


def tokenize(text):
    toks, pos = [], 0
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(pos, pos + 1))
        if m.lastgroup != "ws":
            toks.append((m.lastgroup, m.group(), m.start(), m.end()))
        pos = m.end()
    toks.append(("eof", "", len(text), len(text)))
    return toks


class _Fail(Exception):
    pass


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = tokenize(text)
        self.pos = 0
        self.far = -1
        self.expected = set()

    # token helpers
    def peek(self, k=0):
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def fail(self, *expected):
        if self.pos > self.far:
            self.far, self.expected = self.pos, set(expected)
        elif self.pos == self.far:
            self.expected.update(expected)
        raise _Fail

    def at(self, text):
        kind, t, _, _ = self.peek()
        return t == text and kind != "num"

    def eat(self, text):
        if not self.at(text):
            self.fail(text)
        self.pos += 1

    def ident(self):
        kind, t, _, _ = self.peek()
        if kind != "ident" or t in KEYWORDS:
            self.fail("identifier")
        self.pos += 1
        return t

    def attempt(self, fn):
        save = self.pos
        try:
            return fn()
        except _Fail:
            self.pos = save
            return None

    # formulas
    def formula(self):
        left = self.imp()
        while self.at("<->"):
            self.pos += 1
            left = Iff(left, self.imp())
        return left

    def imp(self):
        left = self.disj()
        if self.at("->"):
            self.pos += 1
            return Implies(left, self.imp())
        return left

    def disj(self):
        args = [self.conj()]
        while self.at("|"):
            self.pos += 1
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self):
        args = [self.neg()]
        while self.at("&"):
            self.pos += 1
            args.append(self.neg())
        return args[0] if len(args) == 1 else And(tuple(args))

    def neg(self):
        if self.at("!"):
            self.pos += 1
            return Not(self.neg())
        a = self.attempt(self.atom)
        if a is not None:
            return a
        self.eat("(")
        phi = self.formula()
        self.eat(")")
        return phi

    # atoms
    def atom(self):
        kind, t, _, _ = self.peek()
        if kind == "ident" and t in PRED_NAMES:
            return self.pred_atom()
        if self.at("(") and self.peek(1)[1] == "D" and self.peek(2)[1] == "[":
            d = self.attempt(self.deriv_atom)
            if d is not None:
                return d
        return self.num_atom()

    def pred_atom(self):
        _, name, start, _ = self.peek()
        self.pos += 1
        self.eat("(")
        f = self.ident()
        second = None
        if self.at(","):
            self.pos += 1
            if name in ("Eq", "Gt"):
                second = self.ident()
            elif name in ("Up", "Down"):
                second = self.term()
            else:
                raise ArityError(f"{name} takes one function argument", SourceSpan(start, self.peek()[3]))
        elif name in ("Eq", "Gt"):
            raise ArityError(f"{name} takes two function arguments", SourceSpan(start, self.peek()[3]))
        self.eat(")")
        self.eat("on")
        a = self.interval()
        if name == "Eq":
            return FunEq(f, second, a)
        if name == "Gt":
            return FunGt(f, second, a)
        if second is not None:
            return PointMono(name, f, second, a)
        return Pred(name, f, a)

    def deriv_atom(self):
        self.eat("(")
        self.eat("D")
        self.eat("[")
        f = self.ident()
        self.eat("]")
        op = self.cmp()
        bound = self.term()
        self.eat(")")
        self.eat("on")
        return DerivCmp(f, op, bound, self.interval())

    def cmp(self):
        for op in CMP_OPS:
            if self.at(op):
                self.pos += 1
                return op
        self.fail(*CMP_OPS)

    def side(self):
        t = self.term()
        if self.at("/"):
            self.pos += 1
            t = Div(t, self.term())
        return t

    def num_atom(self):
        start = self.peek()[2]
        lhs = self.side()
        op = self.cmp()
        rhs = self.side()
        if isinstance(lhs, Div) and isinstance(rhs, Div):
            raise ParseError("division on both sides", SourceSpan(start, self.peek()[2]))
        if op == "=":
            return NumEq(lhs, rhs)
        if op == ">":
            return NumGt(lhs, rhs)
        return NumRel(op, lhs, rhs)

    def interval(self):
        _, t, start, _ = self.peek()
        if t not in ("[", "(", "]"):
            self.fail("[", "(", "]")
        self.pos += 1
        lo_closed = t == "["
        lo = self.end()
        self.eat(",")
        hi = self.end()
        _, t, _, end = self.peek()
        if t not in ("]", ")", "["):
            self.fail("]", ")", "[")
        self.pos += 1
        hi_closed = t == "]"
        if isinstance(lo, PosInf) or isinstance(hi, NegInf):
            raise ParseError("misplaced infinity", SourceSpan(start, end))
        if (isinstance(lo, NegInf) and lo_closed) or (isinstance(hi, PosInf) and hi_closed):
            raise ParseError("infinite end must be open", SourceSpan(start, end))
        return Interval(lo, hi, lo_closed, hi_closed)

    def end(self):
        if self.at("-") and self.peek(1)[1] == "inf":
            self.pos += 2
            return NEG_INF
        if self.at("+") and self.peek(1)[1] == "inf":
            self.pos += 2
            return POS_INF
        return self.term()

    # terms
    def term(self):
        left = self.prod()
        while self.at("+") or self.at("-"):
            # "+inf" / "-inf" belong to the interval end, not to the sum
            if self.peek(1)[1] == "inf":
                break
            op = self.peek()[1]
            self.pos += 1
            right = self.prod()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def prod(self):
        left = self.unary()
        while self.at("*"):
            self.pos += 1
            left = Mul(left, self.unary())
        return left

    def unary(self):
        if self.at("-") and self.peek(1)[1] != "inf":
            self.pos += 1
            return Sub(ZERO, self.unary())
        return self.primary()

    def primary(self):
        kind, t, start, _ = self.peek()
        if kind == "num":
            self.pos += 1
            v = Fraction(t)
            if v == 0:
                return ZERO
            if v == 1:
                return ONE
            return Num(v)
        if t == "D" and kind == "ident":
            self.pos += 1
            self.eat("[")
            f = self.ident()
            self.eat("]")
            # a bare D[f] is only legal inside a derivative-bound atom, so
            # fail softly and let the caller backtrack
            self.eat("(")
            arg = self.term()
            if self.at(","):
                raise ArityError("D[f] takes exactly one argument", SourceSpan(start, self.peek()[3]))
            self.eat(")")
            return DApply(f, arg)
        if self.at("("):
            self.pos += 1
            inner = self.term()
            self.eat(")")
            return inner
        name = self.ident()
        if self.at("("):
            self.pos += 1
            arg = self.term()
            if self.at(","):
                raise ArityError(f"{name} takes exactly one argument", SourceSpan(start, self.peek()[3]))
            self.eat(")")
            return Apply(name, arg)
        return Var(name)


def parse_formula(text: str):
    p = _Parser(text)
    try:
        phi = p.formula()
        if p.peek()[0] != "eof":
            p.fail("end of input")
    except _Fail:
        pos = p.far if p.far >= 0 else p.pos
        tok = p.toks[min(pos, len(p.toks) - 1)]
        span = SourceSpan(min(tok[2], len(text)), min(tok[3], len(text)))
        raise ParseError(f"unexpected {tok[1]!r}", span, p.expected) from None
    return phi


def parse_term(text: str):
    p = _Parser(text)
    try:
        t = p.term()
        if p.peek()[0] != "eof":
            p.fail("end of input")
    except _Fail:
        tok = p.toks[min(max(p.far, 0), len(p.toks) - 1)]
        raise ParseError(f"unexpected {tok[1]!r}", SourceSpan(tok[2], tok[3]), p.expected) from None
    return t


# ---------------------------------------------------------------- printing

def render_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const0):
        return "0"
    if isinstance(t, Const1):
        return "1"
    if isinstance(t, Num):
        v = Fraction(t.value)
        if v < 0:
            return f"(0 - {render_term(Num(-v))})"
        return str(v)
    if isinstance(t, Add):
        return f"({render_term(t.left)} + {render_term(t.right)})"
    if isinstance(t, Sub):
        return f"({render_term(t.left)} - {render_term(t.right)})"
    if isinstance(t, Mul):
        return f"({render_term(t.left)} * {render_term(t.right)})"
    if isinstance(t, Apply):
        return f"{t.fn}({render_term(t.arg)})"
    if isinstance(t, DApply):
        return f"D[{t.fn}]({render_term(t.arg)})"
    if isinstance(t, Div):
        return f"{render_term(t.num)} / {render_term(t.den)}"
    raise TypeError(t)


def render_end(e) -> str:
    if isinstance(e, NegInf):
        return "-inf"
    if isinstance(e, PosInf):
        return "+inf"
    return render_term(e)


def render_interval(a: Interval) -> str:
    return (("[" if a.lo_closed else "(") + render_end(a.lo) + "," + render_end(a.hi)
            + ("]" if a.hi_closed else ")"))


def render_atom(a) -> str:
    if isinstance(a, NumEq):
        return f"({render_term(a.lhs)} = {render_term(a.rhs)})"
    if isinstance(a, NumGt):
        return f"({render_term(a.lhs)} > {render_term(a.rhs)})"
    if isinstance(a, NumRel):
        return f"({render_term(a.lhs)} {a.op} {render_term(a.rhs)})"
    if isinstance(a, FunEq):
        return f"Eq({a.f},{a.g}) on {render_interval(a.interval)}"
    if isinstance(a, FunGt):
        return f"Gt({a.f},{a.g}) on {render_interval(a.interval)}"
    if isinstance(a, Pred):
        return f"{a.kind}({a.f}) on {render_interval(a.interval)}"
    if isinstance(a, PointMono):
        return f"{a.kind}({a.f},{render_term(a.point)}) on {render_interval(a.interval)}"
    if isinstance(a, DerivCmp):
        return f"(D[{a.f}] {a.op} {render_term(a.bound)}) on {render_interval(a.interval)}"
    raise TypeError(a)


def render_formula(phi) -> str:
    if isinstance(phi, Not):
        return "!" + render_formula(phi.arg)
    if isinstance(phi, And):
        return "(" + " & ".join(render_formula(a) for a in phi.args) + ")"
    if isinstance(phi, Or):
        return "(" + " | ".join(render_formula(a) for a in phi.args) + ")"
    if isinstance(phi, Implies):
        return f"({render_formula(phi.left)} -> {render_formula(phi.right)})"
    if isinstance(phi, Iff):
        return f"({render_formula(phi.left)} <-> {render_formula(phi.right)})"
    return render_atom(phi)
