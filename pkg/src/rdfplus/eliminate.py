"""Reduction of ordered flat conjunctions to function-free arithmetic.

Each branch passes through four rewrites: endpoint case splits, removal of
negated function literals, evaluation of every function at every domain
variable, and finally the replacement of function literals by constraints
on the sampled values y, slopes t, tail slopes gamma and order tokens k.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace

from .normalize import (
    DBound, FEq, FGt, FInterval, INTERVAL_LITS, NEG, POS, OrderedConjunction, Shape,
    SlopeLit, ValueLit, domain_vars, enumerate_orderings, flatten, literal_functions,
    render_literal, to_dnf,
)
from .syntax import Div, Fresh, Not, Sub, Var, expand_derived, variables
from .tarski import NEGATE, TAnd, TAtom, TImplies, TOr, atom, term_of


# ---------------------------------------------------------------- data

@dataclass
class VarTable:
    chain: list
    functions: list
    y: dict = field(default_factory=dict)
    t: dict = field(default_factory=dict)
    gamma0: dict = field(default_factory=dict)
    gammar: dict = field(default_factory=dict)
    k0: dict = field(default_factory=dict)
    kr: dict = field(default_factory=dict)
    gamma_lits: list = field(default_factory=list)   # (side, f, rel, term)
    k_pairs: list = field(default_factory=list)      # (side, f, g): k_side^f >= k_side^g

    @property
    def r(self):
        return len(self.chain)

    def ind(self, end: str) -> int:
        if end == NEG:
            return 1
        if end == POS:
            return self.r
        return self.chain.index(end) + 1


@dataclass
class Branch:
    body: list
    chain: list
    merged: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    table: VarTable | None = None

    @property
    def literals(self):
        return self.body + [atom(">", b, a) for a, b in zip(self.chain, self.chain[1:])]

    def functions(self):
        out = {}
        for lit in self.body:
            for f in sorted(literal_functions(lit)):
                out.setdefault(f, None)
        return list(out)

    def note(self, rule, lit):
        self.trace.append((rule, render_literal(lit) if not isinstance(lit, str) else lit))

    def copy(self):
        return Branch(list(self.body), list(self.chain), dict(self.merged), list(self.trace), self.table)

    def trace_json(self) -> str:
        return json.dumps([{"rule": r, "literal": s} for r, s in self.trace])


@dataclass
class Reduced:
    """phi4 of one branch together with the phi3-stage branch."""
    formula: object
    known_positive: list
    branch: Branch


def _pos(chain, v):
    return chain.index(v)


def _is_empty(chain, a: FInterval):
    """True if the interval is empty under the strict chain order."""
    if a.lo_inf or a.hi_inf:
        return False
    i, j = _pos(chain, a.lo), _pos(chain, a.hi)
    return i > j or (i == j and not (a.lo_closed and a.hi_closed))


def _splits(lit):
    """Literal kinds whose openness matters (everything else is closed)."""
    return isinstance(lit, FGt) or (isinstance(lit, DBound) and lit.op in ("<", ">"))


# ---------------------------------------------------------------- step 1

def _touch(lit, w, fresh):
    if isinstance(lit, FGt):
        z1, z2 = fresh(), fresh()
        return [ValueLit(z1, lit.f, w), ValueLit(z2, lit.g, w), atom("=", z1, z2)]
    z = fresh()
    return [SlopeLit(z, lit.f, w), atom("=", z, lit.bound)]


def _with_interval(lit, lo, hi, lo_closed, hi_closed):
    return replace(lit, interval=FInterval(lo, hi, lo_closed, hi_closed))


def step1_endpoints(branch: Branch, fresh: Fresh) -> list:
    b = branch.copy()
    chain = b.chain
    pending, body = [], []
    # empty intervals, closing (Remark), unbounded-open rewrites (1a / 1c)
    for lit in b.body:
        if not isinstance(lit, INTERVAL_LITS):
            body.append(lit)
            continue
        a = lit.interval
        if _is_empty(chain, a):
            if lit.neg:
                b.note("empty", f"branch closed by {render_literal(lit)}")
                return []
            b.note("empty", lit)
            continue
        if lit.neg:
            body.append(lit)
            continue
        if not _splits(lit):
            if not a.is_closed:
                b.note("close", lit)
                lit = replace(lit, interval=a.closed())
            body.append(lit)
            continue
        rule = "1a" if isinstance(lit, FGt) else "1c"
        if a.lo_inf and not a.hi_inf and not a.hi_closed:
            w2 = a.hi
            k = _pos(chain, w2)
            if k > 0:
                w1 = chain[k - 1]
            else:
                w1 = fresh()
                chain.insert(k, w1)
            b.note(rule, lit)
            body.append(_with_interval(lit, NEG, w1, False, True))
            pending.append(_with_interval(lit, w1, w2, True, False))
            body.append(atom("<", w1, w2))
        elif a.hi_inf and not a.lo_inf and not a.lo_closed:
            w1 = a.lo
            k = _pos(chain, w1)
            if k + 1 < len(chain):
                w2 = chain[k + 1]
            else:
                w2 = fresh()
                chain.insert(k + 1, w2)
            b.note(rule, lit)
            pending.append(_with_interval(lit, w1, w2, False, True))
            body.append(_with_interval(lit, w2, POS, True, False))
            body.append(atom("<", w1, w2))
        elif not a.lo_inf and not a.hi_inf and not a.is_closed:
            pending.append(lit)
        else:
            body.append(lit)
    # case splits (1b1 / 1d1), then distribution back to DNF (1b2 / 1d2)
    options = []
    for lit in pending:
        a = lit.interval
        w1, w2 = a.lo, a.hi
        rule = "1b1" if isinstance(lit, FGt) else "1d1"
        closed = [_with_interval(lit, w1, w2, True, True)]
        alts = [(closed, None)]
        if not a.hi_closed:
            alts.append(([_with_interval(lit, w1, w2, True, False)] + _touch(lit, w2, fresh), None))
        if not a.lo_closed:
            alts.append(([_with_interval(lit, w1, w2, False, True)] + _touch(lit, w1, fresh), None))
        if not a.lo_closed and not a.hi_closed:
            both = [lit] + _touch(lit, w1, fresh) + _touch(lit, w2, fresh)
            alts.append((both, lit))
        options.append([(rule, lit, lits, mid) for lits, mid in alts])
    out = []
    for combo in itertools.product(*options) if options else [()]:
        nb = Branch(list(body), list(chain), dict(b.merged), list(b.trace), None)
        for rule, orig, lits, mid in combo:
            nb.note(rule, orig)
            nb.body.extend(lits)
            if mid is not None:
                _midpoint(nb, mid, fresh)
        out.append(nb)
    if len(out) > 1:
        for nb in out:
            nb.note("1b2" if any(isinstance(l, FGt) for l in pending) else "1d2", "distributed")
    return out


def _midpoint(b: Branch, lit, fresh):
    """1b3 / 1d3: add a point strictly inside ]w1,w2[ when none exists."""
    w1, w2 = lit.interval.lo, lit.interval.hi
    i, j = _pos(b.chain, w1), _pos(b.chain, w2)
    if j != i + 1:
        return
    w, z = fresh(), fresh()
    b.chain.insert(j, w)
    b.body.extend([atom("<", w1, w), atom("<", w, w2), ValueLit(z, lit.f, w)])
    b.note("1b3" if isinstance(lit, FGt) else "1d3", lit)


# ---------------------------------------------------------------- step 2

def _bounds(a: FInterval, x):
    out = []
    if not a.lo_inf:
        out.append(atom("<=" if a.lo_closed else "<", a.lo, x))
    if not a.hi_inf:
        out.append(atom("<=" if a.hi_closed else "<", x, a.hi))
    return out


_CONVEX_NEG = {"Convex": ">", "StrictConvex": ">=", "Concave": "<", "StrictConcave": "<="}


def _remove_negative(lit, fresh):
    a = lit.interval
    if isinstance(lit, (FEq, FGt)):
        x, y1, y2 = fresh(), fresh(), fresh()
        rel = "!=" if isinstance(lit, FEq) else "<="
        return "2a" if isinstance(lit, FEq) else "2b", (
            _bounds(a, x) + [ValueLit(y1, lit.f, x), ValueLit(y2, lit.g, x), atom(rel, y1, y2)])
    if isinstance(lit, DBound):
        x, y1 = fresh(), fresh()
        return "2c", _bounds(a, x) + [SlopeLit(y1, lit.f, x), atom(NEGATE[lit.op], y1, lit.bound)]
    if lit.kind in ("StrictUp", "StrictDown"):
        x1, x2, y1, y2 = fresh(), fresh(), fresh(), fresh()
        gamma = (_bounds(replace(a, hi=POS, hi_closed=False), x1) + [atom("<", x1, x2)]
                 + _bounds(replace(a, lo=NEG, lo_closed=False), x2)
                 + [ValueLit(y1, lit.f, x1), ValueLit(y2, lit.f, x2)])
        return "2d", gamma + [atom(">=" if lit.kind == "StrictUp" else "<=", y1, y2)]
    x1, x2, x3, y1, y2, y3 = (fresh() for _ in range(6))
    X1, X2, X3, Y1, Y2, Y3 = map(Var, (x1, x2, x3, y1, y2, y3))
    gamma = (_bounds(replace(a, hi=POS, hi_closed=False), x1)
             + [atom("<", x1, x2), atom("<", x2, x3)]
             + _bounds(replace(a, lo=NEG, lo_closed=False), x3)
             + [ValueLit(y1, lit.f, x1), ValueLit(y2, lit.f, x2), ValueLit(y3, lit.f, x3)])
    from .syntax import Mul
    lhs = Mul(Sub(Y2, Y1), Sub(X3, X1))
    rhs = Mul(Sub(X2, X1), Sub(Y3, Y1))
    return "2e", gamma + [TAtom(_CONVEX_NEG[lit.kind], lhs, rhs)]


def step2_negatives(branch: Branch, fresh: Fresh, cap=8) -> list:
    """Replace negated function literals by witness points, then place the
    new points in the chain (one branch per consistent placement)."""
    b = branch.copy()
    body, changed = [], False
    for lit in b.body:
        if isinstance(lit, INTERVAL_LITS) and lit.neg:
            rule, repl = _remove_negative(lit, fresh)
            b.note(rule, lit)
            body.extend(repl)
            changed = True
        else:
            body.append(lit)
    b.body = body
    if not changed:
        return [b]
    out = []
    for oc in enumerate_orderings(b.body, cap=cap, chain=b.chain, merged=b.merged):
        nb = Branch(oc.body, oc.chain, oc.merged, list(b.trace), None)
        nb.note("2-order", " < ".join(oc.chain))
        out.append(nb)
    return out


# ---------------------------------------------------------------- step 3

def step3_evaluate(branch: Branch, fresh: Fresh | None = None) -> Branch:
    b = branch.copy()
    fns = b.functions()
    if fns and not b.chain:
        b.chain.append((fresh or Fresh(_branch_names(b)))())
        b.note("3", f"added domain variable {b.chain[0]}")
    table = VarTable(list(b.chain), fns)
    existing = list(b.body)
    for f in fns:
        for j, v in enumerate(b.chain, 1):
            table.y[f, j] = f"_y_{f}_{j}"
            table.t[f, j] = f"_t_{f}_{j}"
            b.body.append(ValueLit(table.y[f, j], f, v))
            b.body.append(SlopeLit(table.t[f, j], f, v))
    pos = {v: j for j, v in enumerate(b.chain, 1)}
    for lit in existing:
        if isinstance(lit, ValueLit):
            b.body.append(atom("=", lit.z, table.y[lit.f, pos[lit.x]]))
        elif isinstance(lit, SlopeLit):
            b.body.append(atom("=", lit.z, table.t[lit.f, pos[lit.x]]))
    b.table = table
    b.note("3", f"evaluated {len(fns)} function(s) at {len(b.chain)} point(s)")
    return b


def _branch_names(b):
    names = set(b.chain)
    for lit in b.body:
        if isinstance(lit, (ValueLit, SlopeLit)):
            names.update((lit.z, lit.x))
    return names


# ---------------------------------------------------------------- step 4

class _Eliminator:
    def __init__(self, branch: Branch):
        self.b = branch
        self.tab = branch.table
        self.out = []
        self.k_pairs = set()        # (side, f, g) meaning k_side^f >= k_side^g
        self.gamma_lits = []        # (side, f, rel, term) meaning gamma_side^f rel term

    def y(self, f, i):
        return Var(self.tab.y[f, i])

    def t(self, f, i):
        return Var(self.tab.t[f, i])

    def sec(self, f, j):
        c = self.tab.chain
        return Div(Sub(self.y(f, j + 1), self.y(f, j)), Sub(Var(c[j]), Var(c[j - 1])))

    def gamma(self, side, f):
        store = self.tab.gamma0 if side == "0" else self.tab.gammar
        store.setdefault(f, f"_g{side}_{f}")
        return Var(store[f])

    def kvar(self, side, f):
        store = self.tab.k0 if side == "0" else self.tab.kr
        store.setdefault(f, f"_k{side}_{f}")
        return Var(store[f])

    def add(self, rule, phi):
        self.out.append(phi)
        self.b.note(rule, phi)

    def add_gamma(self, rule, side, f, rel, term):
        self.add(rule, TAtom(rel, self.gamma(side, f), term))
        self.gamma_lits.append((side, f, rel, term))

    # 4a
    def fun_eq(self, lit):
        a, ind = lit.interval, self.tab.ind
        for i in range(ind(a.lo), ind(a.hi) + 1):
            self.add("4a", TAtom("=", self.y(lit.f, i), self.y(lit.g, i)))
            self.add("4a", TAtom("=", self.t(lit.f, i), self.t(lit.g, i)))
        if a.lo_inf:
            self.add_gamma("4a", "0", lit.f, "=", self.gamma("0", lit.g))
            self.gamma_lits.append(("0", lit.g, "=", self.gamma("0", lit.f)))
        if a.hi_inf:
            self.add_gamma("4a", "r", lit.f, "=", self.gamma("r", lit.g))
            self.gamma_lits.append(("r", lit.g, "=", self.gamma("r", lit.f)))

    # 4b
    def fun_gt(self, lit):
        a, ind, f, g = lit.interval, self.tab.ind, lit.f, lit.g
        if not a.lo_inf and not a.hi_inf:
            i1, i2 = ind(a.lo), ind(a.hi)
            lo = i1 if a.lo_closed else i1 + 1
            hi = i2 if a.hi_closed else i2 - 1
            for i in range(lo, hi + 1):
                self.add("4b1", TAtom(">", self.y(f, i), self.y(g, i)))
            if i1 < i2:
                if not a.lo_closed:
                    self.add("4b1", TAtom(">=", self.t(f, i1), self.t(g, i1)))
                if not a.hi_closed:
                    self.add("4b1", TAtom("<=", self.t(f, i2), self.t(g, i2)))
            return
        lo = 1 if a.lo_inf else ind(a.lo)
        hi = self.tab.r if a.hi_inf else ind(a.hi)
        for i in range(lo, hi + 1):
            self.add("4b2", TAtom(">", self.y(f, i), self.y(g, i)))
        for side, unbounded in (("0", a.lo_inf), ("r", a.hi_inf)):
            if unbounded:
                self.add("4b2", TAtom(">=", self.kvar(side, f), self.kvar(side, g)))
                self.k_pairs.add((side, f, g))

    # 4c / 4d
    def deriv(self, lit):
        a, ind, f, op = lit.interval, self.tab.ind, lit.f, lit.op
        bound = term_of(lit.bound)
        i1, i2 = ind(a.lo), ind(a.hi)
        if a.is_closed:
            rule, irange = "4c", range(i1, i2 + 1)
        else:
            rule = "4d"
            irange = range(i1 if a.lo_closed else i1 + 1, (i2 if a.hi_closed else i2 - 1) + 1)
        for i in irange:
            self.add(rule, TAtom(op, self.t(f, i), bound))
        for j in range(i1, i2):
            self.add(rule, TAtom(op, self.sec(f, j), bound))
            if op in ("<=", ">="):
                self.add(rule, TImplies(TAtom("=", self.sec(f, j), bound),
                                        TAnd((TAtom("=", self.t(f, j), bound),
                                              TAtom("=", self.t(f, j + 1), bound)))))
        if rule == "4c":
            if a.lo_inf:
                self.add_gamma(rule, "0", f, op, bound)
            if a.hi_inf:
                self.add_gamma(rule, "r", f, op, bound)

    # 4e / 4f / 4g
    def shape(self, lit):
        a, ind, f, kind = lit.interval, self.tab.ind, lit.f, lit.kind
        i1, i2 = ind(a.lo), ind(a.hi)
        r = self.tab.r
        zero = term_of("0")
        if kind in ("StrictUp", "StrictDown"):
            up = kind == "StrictUp"
            for i in range(i1, i2 + 1):
                self.add("4e", TAtom(">=" if up else "<=", self.t(f, i), zero))
            for j in range(i1, i2):
                self.add("4e", TAtom(">" if up else "<", self.y(f, j + 1), self.y(f, j)))
            if a.lo_inf:
                self.add_gamma("4e", "0", f, ">" if up else "<", zero)
            if a.hi_inf:
                self.add_gamma("4e", "r", f, ">" if up else "<", zero)
            return
        convex = kind in ("Convex", "StrictConvex")
        strict = kind.startswith("Strict")
        rule = "4g" if strict else "4f"
        le = ("<" if strict else "<=") if convex else (">" if strict else ">=")
        ge = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[le]
        for i in range(i1, i2):
            s = self.sec(f, i)
            self.add(rule, TAtom(le, self.t(f, i), s))
            self.add(rule, TAtom(le, s, self.t(f, i + 1)))
            if not strict:
                self.add(rule, TImplies(TOr((TAtom("=", s, self.t(f, i)), TAtom("=", s, self.t(f, i + 1)))),
                                        TAtom("=", self.t(f, i), self.t(f, i + 1))))
        if a.lo_inf:
            self.add_gamma(rule, "0", f, le, self.t(f, 1))
        if a.hi_inf:
            self.add_gamma(rule, "r", f, ge, self.t(f, r))

    # 4h
    def k_rules(self):
        if not self.k_pairs:
            return
        r = self.tab.r
        ks = sorted({(s, f) for s, f, _ in self.k_pairs} | {(s, g) for s, _, g in self.k_pairs})
        for side, f in ks:
            k = self.kvar(side, f)
            self.add("4h1", TAtom("<=", Sub(term_of("0"), term_of("1")), k))
            self.add("4h1", TAtom("<=", k, term_of("1")))
        pairs = set(self.k_pairs)
        done = set()
        while True:
            new = set()
            for (s1, f, g1) in pairs:
                for (s2, g2, h) in pairs:
                    if s1 == s2 and g1 == g2 and (s1, f, g1, h) not in done:
                        done.add((s1, f, g1, h))
                        new.add((s1, f, h))
                        idx = 1 if s1 == "0" else r
                        self.add("4h2", TAtom(">=", self.kvar(s1, f), self.kvar(s1, h)))
                        self.add("4h2", TAtom(">", self.y(f, idx), self.y(h, idx)))
            if new <= pairs:
                break
            pairs |= new
        for side, f, g in sorted(pairs):
            if side == "0":
                lows = [m for s, ff, rel, m in self.gamma_lits if s == "0" and ff == f and rel in (">=", ">", "=")]
                highs = [n for s, gg, rel, n in self.gamma_lits if s == "0" and gg == g and rel in ("<=", "<", "=")]
                for m in lows:
                    for n in highs:
                        self.add("4h3", TAtom("<=", m, n))
            else:
                highs = [m for s, ff, rel, m in self.gamma_lits if s == "r" and ff == f and rel in ("<=", "<", "=")]
                lows = [n for s, gg, rel, n in self.gamma_lits if s == "r" and gg == g and rel in (">=", ">", "=")]
                for m in highs:
                    for n in lows:
                        self.add("4h3", TAtom(">=", m, n))


def step4_eliminate(branch: Branch) -> Reduced:
    b = branch.copy()
    el = _Eliminator(b)
    arith = []
    for lit in b.body:
        if isinstance(lit, (ValueLit, SlopeLit)):
            continue
        if isinstance(lit, INTERVAL_LITS):
            if lit.neg:
                raise ValueError("negative function literal reached step 4")
            if isinstance(lit, FEq):
                el.fun_eq(lit)
            elif isinstance(lit, FGt):
                el.fun_gt(lit)
            elif isinstance(lit, DBound):
                el.deriv(lit)
            else:
                el.shape(lit)
            continue
        arith.append(lit)
    el.k_rules()
    b.table = replace(b.table, gamma_lits=list(el.gamma_lits), k_pairs=sorted(el.k_pairs))
    b.note("4i", "dropped function literals")
    chain = b.chain
    chain_lits = [atom(">", v, u) for u, v in zip(chain, chain[1:])]
    formula = TAnd(tuple(arith + chain_lits + el.out))
    known = [Sub(Var(v), Var(u)) for u, v in zip(chain, chain[1:])]
    return Reduced(formula, known, b)


# ---------------------------------------------------------------- pipeline

def branches_of(phi, mode="satisfiability", cap=8, fresh=None):
    """Ordered branches of phi (or of its negation in validity mode)."""
    if mode == "validity":
        phi = Not(phi)
    elif mode != "satisfiability":
        raise ValueError(mode)
    fresh = fresh or Fresh(variables(phi))
    phi = expand_derived(phi, fresh)
    out = []
    for conj in to_dnf(phi):
        flat = flatten(conj, fresh)
        for oc in enumerate_orderings(flat, cap=cap):
            out.append(Branch(oc.body, oc.chain, oc.merged, [("order", " < ".join(oc.chain))]))
    return out, fresh


def pipeline(phi, mode="satisfiability", cap=8):
    """All terminal branches: list of Reduced (phi4 plus the phi3 branch)."""
    ordered, fresh = branches_of(phi, mode, cap)
    out = []
    for b0 in ordered:
        for b1 in step1_endpoints(b0, fresh):
            for b2 in step2_negatives(b1, fresh, cap):
                b3 = step3_evaluate(b2, fresh)
                out.append(step4_eliminate(b3))
    return out
