"""Explicit C1 models from a numeric model of a reduced branch.

Every function variable becomes a piecewise function through the sampled
points (eta_i, y_i) with slopes t_i: on each interval a straight chord plus
an elastic bump that fixes the end slopes, and exponential tails outside.
When order tokens k are present on an unbounded side the tail is rebuilt
through an extra point one unit further out so that the k-order of the
functions holds all the way to infinity.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import TopologicalSorter

import numpy as np

from .elastic import ElasticSpec, NoExistence, eval_array, make_defined, sgn, signed_alpha
from .normalize import NEG, POS, DBound, FEq, FGt, Shape, SlopeLit, ValueLit, render_literal
from .tarski import MissingVariable, TAtom, atom_margin, conjuncts, eval_tarski, eval_term

STITCH_TOL = 1e-6
FD_STEP = 1e-6


class ExistenceViolation(RuntimeError):
    pass


class IncompatibleOrder(ValueError):
    pass


class AlphaSearchExhausted(RuntimeError):
    def __init__(self, report, alpha):
        super().__init__(f"no passing witness down to alpha={alpha}")
        self.report = report
        self.alpha = alpha


class ApproximateModel(ValueError):
    pass


# ---------------------------------------------------------------- interval points

@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction
    lo_open: bool = False
    hi_open: bool = False

    def __contains__(self, x):
        above = x > self.lo if self.lo_open else x >= self.lo
        below = x < self.hi if self.hi_open else x <= self.hi
        return above and below

    def is_empty(self):
        return self.lo > self.hi or (self.lo == self.hi and (self.lo_open or self.hi_open))


def _closure(nodes, pairs):
    """Reflexive-transitive closure as a set of (small, big) pairs."""
    reach = {n: {n} for n in nodes}
    for a, b in pairs:
        reach[a].add(b)
    changed = True
    while changed:
        changed = False
        for a in nodes:
            new = set().union(*(reach[b] for b in reach[a]))
            if new != reach[a]:
                reach[a] = new
                changed = True
    return {(a, b) for a in nodes for b in reach[a]}


def _compatible(small: Interval, big: Interval) -> bool:
    """Some x in small and y in big with x <= y."""
    if small.lo < big.hi:
        return True
    return small.lo == big.hi and not small.lo_open and not big.hi_open


def select_interval_points(intervals: dict, order) -> dict:
    """One point per interval, monotone along order.

    intervals maps keys to Interval; order holds pairs (j, i) meaning
    I_j <= I_i, which must force phi_j <= phi_i.  Points are chosen in a
    topological order as the midpoint of [max(lo_k, chosen predecessors),
    min(hi_k, successors' upper ends)].  Keys in a cycle share one point
    taken from the intersection of their intervals.
    """
    keys = list(intervals)
    for k in keys:
        if intervals[k].is_empty():
            raise IncompatibleOrder(f"interval for {k!r} is empty")
    order = [(a, b) for a, b in order]
    for a, b in order:
        if a not in intervals or b not in intervals:
            raise KeyError(a if a not in intervals else b)
    le = _closure(keys, order)
    for a, b in le:
        if a != b and not _compatible(intervals[a], intervals[b]):
            raise IncompatibleOrder(f"{a!r} <= {b!r} cannot be met inside the intervals")
    # collapse cycles
    rep, groups = {}, {}
    for k in keys:
        cyc = [j for j in keys if (k, j) in le and (j, k) in le]
        rep[k] = min(cyc, key=keys.index)
        groups.setdefault(rep[k], []).append(k)
    merged = {}
    for r, members in groups.items():
        ivs = [intervals[m] for m in members]
        lo = max(iv.lo for iv in ivs)
        hi = min(iv.hi for iv in ivs)
        lo_open = any(iv.lo_open for iv in ivs if iv.lo == lo)
        hi_open = any(iv.hi_open for iv in ivs if iv.hi == hi)
        merged[r] = Interval(lo, hi, lo_open, hi_open)
        if merged[r].is_empty():
            raise IncompatibleOrder(f"cycle through {members} has no common point")
    reps = list(groups)
    below = {r: {rep[a] for a, b in le if rep[b] == r and rep[a] != r} for r in reps}
    above = {r: {rep[b] for a, b in le if rep[a] == r and rep[b] != r} for r in reps}
    chosen = {}
    for r in TopologicalSorter({r: below[r] for r in reps}).static_order():
        iv = merged[r]
        lo = max([iv.lo] + [chosen[j] for j in below[r]])
        hi = min([iv.hi] + [merged[j].hi for j in above[r]])
        chosen[r] = lo if lo >= hi else (lo + hi) / 2
    out = {k: chosen[rep[k]] for k in keys}
    for k in keys:
        if out[k] not in intervals[k]:
            raise IncompatibleOrder(f"no admissible point for {k!r}")
    for a, b in le:
        if out[a] > out[b]:
            raise IncompatibleOrder(f"order {a!r} <= {b!r} broken")
    return out


# ---------------------------------------------------------------- witness data

@dataclass
class TailRecord:
    """Rebuilt unbounded tail: asymptotic slope phi, extra point (y_hat, t_hat)."""
    phi: Fraction
    y_hat: Fraction
    t_hat: Fraction


@dataclass
class WitnessFunction:
    name: str
    breakpoints: list
    values: list
    slopes: list
    gamma_left: Fraction
    gamma_right: Fraction
    pieces: list = field(default_factory=list)
    left_tail: TailRecord | None = None
    right_tail: TailRecord | None = None
    alpha: Fraction = Fraction(0)

    @property
    def offset(self):
        return 1 if self.left_tail else 0

    def index_of(self, eta):
        try:
            return self.breakpoints.index(eta)
        except ValueError:
            return None

    def to_json(self):
        def tail(t):
            return None if t is None else {"phi": str(t.phi), "y_hat": str(t.y_hat), "t_hat": str(t.t_hat)}
        return {
            "name": self.name, "alpha": str(self.alpha),
            "breakpoints": [str(x) for x in self.breakpoints],
            "values": [str(x) for x in self.values], "slopes": [str(x) for x in self.slopes],
            "gamma_left": str(self.gamma_left), "gamma_right": str(self.gamma_right),
            "pieces": [p.to_json() for p in self.pieces],
            "left_tail": tail(self.left_tail), "right_tail": tail(self.right_tail),
        }

    @staticmethod
    def from_json(obj):
        def tail(t):
            return None if t is None else TailRecord(Fraction(t["phi"]), Fraction(t["y_hat"]), Fraction(t["t_hat"]))
        fr = lambda xs: [Fraction(x) for x in xs]  # noqa: E731
        return WitnessFunction(
            obj["name"], fr(obj["breakpoints"]), fr(obj["values"]), fr(obj["slopes"]),
            Fraction(obj["gamma_left"]), Fraction(obj["gamma_right"]),
            [ElasticSpec.from_json(p) for p in obj["pieces"]],
            tail(obj["left_tail"]), tail(obj["right_tail"]), Fraction(obj["alpha"]),
        )


def witnesses_to_json(ws: dict, alpha=None) -> dict:
    return {"alpha": None if alpha is None else str(alpha),
            "functions": {f: w.to_json() for f, w in ws.items()}}


def witnesses_from_json(obj) -> dict:
    return {f: WitnessFunction.from_json(w) for f, w in obj["functions"].items()}


# ---------------------------------------------------------------- evaluation

def _tail_left(w, eta):
    x0, y0, t0, g = (float(v) for v in (w.breakpoints[0], w.values[0], w.slopes[0], w.gamma_left))
    s = eta - x0
    e = np.exp(s)
    return y0 + (g - t0) * (1 - e) + g * s, g + (t0 - g) * e


def _tail_right(w, eta):
    xn, yn, tn, g = (float(v) for v in (w.breakpoints[-1], w.values[-1], w.slopes[-1], w.gamma_right))
    s = eta - xn
    e = np.exp(-s)
    return yn + (tn - g) * (1 - e) + g * s, g + (tn - g) * e


def _segment(w, k, eta):
    x0, x1 = float(w.breakpoints[k]), float(w.breakpoints[k + 1])
    dx = x1 - x0
    dy = float(w.values[k + 1] - w.values[k])
    p = np.clip((eta - x0) / dx, 0.0, 1.0)
    cv, cd = eval_array(w.pieces[k], p)
    return float(w.values[k]) + dy * p + cv, (dy + cd) / dx


def eval_witness_array(w: WitnessFunction, etas):
    xs = np.atleast_1d(np.asarray(etas, dtype=float))
    vals = np.empty_like(xs)
    ders = np.empty_like(xs)
    bx = np.array([float(x) for x in w.breakpoints])
    left, right = xs < bx[0], xs > bx[-1]
    if left.any():
        vals[left], ders[left] = _tail_left(w, xs[left])
    if right.any():
        vals[right], ders[right] = _tail_right(w, xs[right])
    mid = ~(left | right)
    if mid.any() and len(bx) > 1:
        seg = np.clip(np.searchsorted(bx, xs, side="right") - 1, 0, len(bx) - 2)
        for k in np.unique(seg[mid]):
            m = mid & (seg == k)
            vals[m], ders[m] = _segment(w, int(k), xs[m])
    for k, x in enumerate(bx):
        hit = xs == x
        vals[hit], ders[hit] = float(w.values[k]), float(w.slopes[k])
    return vals, ders


def eval_witness(w: WitnessFunction, eta) -> float:
    return float(eval_witness_array(w, [float(eta)])[0][0])


def eval_witness_deriv(w: WitnessFunction, eta) -> float:
    return float(eval_witness_array(w, [float(eta)])[1][0])


def sample_witness(w: WitnessFunction, lo, hi, n) -> list:
    xs = np.linspace(float(lo), float(hi), n)
    v, d = eval_witness_array(w, xs)
    return list(zip(xs.tolist(), v.tolist(), d.tolist()))


def witness_csv(w: WitnessFunction, lo, hi, n) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["eta", "value", "derivative"])
    out.writerows(sample_witness(w, lo, hi, n))
    return buf.getvalue()


# ---------------------------------------------------------------- skeleton

def _branch(phi3):
    return getattr(phi3, "branch", phi3)


def _values(model):
    return getattr(model, "assignment", model)


def _val(values, name) -> Fraction:
    return Fraction(values.get(name, 0))


def _term_value(values, term) -> Fraction:
    return eval_term(term, _DefaultZero(values))


class _DefaultZero(dict):
    def __init__(self, values):
        super().__init__(values)

    def __contains__(self, k):
        return True

    def __missing__(self, k):
        return Fraction(0)


@dataclass
class Skeleton:
    """Breakpoint data of every function before the elastic parts are fixed."""
    eta: list
    functions: dict


def _k_side(table, values, side, funcs):
    """Rebuild the tails on one unbounded side of the k-ordered functions."""
    pairs = [(f, g) for s, f, g in table.k_pairs if s == side]
    if not pairs:
        return
    fam = sorted({f for f, _ in pairs} | {g for _, g in pairs})
    lits = [(f, rel, _term_value(values, term)) for s, f, rel, term in table.gamma_lits
            if s == side and f in fam]
    mus = [mu for _, _, mu in lits]
    m, M = (min(mus), max(mus)) if mus else (Fraction(0), Fraction(0))
    ivs = {}
    for f in fam:
        lows = [(mu, rel == ">") for g, rel, mu in lits if g == f and rel in ("=", ">=", ">")]
        highs = [(mu, rel == "<") for g, rel, mu in lits if g == f and rel in ("<", "<=", "=")]
        lo = max([mu for mu, _ in lows] + [m - 1])
        hi = min([mu for mu, _ in highs] + [M + 1])
        lo_open = any(strict for mu, strict in lows if mu == lo)
        hi_open = any(strict for mu, strict in highs if mu == hi)
        if side == "0":
            # work in the mirror image eta -> -eta, where slopes change sign
            lo, hi, lo_open, hi_open = -hi, -lo, hi_open, lo_open
        ivs[f] = Interval(lo, hi, lo_open, hi_open)
    le = _closure(fam, [(g, f) for f, g in pairs])
    phi = select_interval_points(ivs, [(g, f) for f, g in pairs])
    end = -1 if side == "r" else 0
    for f in fam:
        d = funcs[f]
        y = d["values"][end]
        t = d["slopes"][end] if side == "r" else -d["slopes"][end]
        lower = [funcs[g]["values"][end] for g in fam if g != f and (g, f) in le]
        upper = [funcs[g]["values"][end] for g in fam if g != f and (f, g) in le]
        y_inf = max(lower) if lower else y - 1
        y_sup = min(upper) if upper else y + 1
        y_over, y_under = (y + y_sup) / 2, (y + y_inf) / 2
        p = phi[f]
        y_inf_line, over_inf, under_inf = y + p, y_over + p, y_under + p
        if p < t:
            y_hat = (y_inf_line + over_inf) / 2
            t_hat = (y_hat + over_inf) / 2 + p - y_hat
        elif p > t:
            y_hat = (y_inf_line + under_inf) / 2
            t_hat = (y_hat + under_inf) / 2 + p - y_hat
        else:
            y_hat, t_hat = y_inf_line, p
        if side == "r":
            d["breakpoints"].append(d["breakpoints"][-1] + 1)
            d["values"].append(y_hat)
            d["slopes"].append(t_hat)
            d["gamma_right"] = p
            d["right_tail"] = TailRecord(p, y_hat, t_hat)
        else:
            d["breakpoints"].insert(0, d["breakpoints"][0] - 1)
            d["values"].insert(0, y_hat)
            d["slopes"].insert(0, -t_hat)
            d["gamma_left"] = -p
            d["left_tail"] = TailRecord(-p, y_hat, -t_hat)


def skeleton(phi3, model) -> Skeleton:
    b = _branch(phi3)
    table, values = b.table, _values(model)
    eta = [_val(values, v) for v in table.chain]
    funcs = {}
    for f in table.functions:
        ys = [_val(values, table.y[f, i]) for i in range(1, table.r + 1)]
        ts = [_val(values, table.t[f, i]) for i in range(1, table.r + 1)]
        funcs[f] = {
            "breakpoints": list(eta), "values": ys, "slopes": ts,
            "gamma_left": _val(values, table.gamma0[f]) if f in table.gamma0 else ts[0],
            "gamma_right": _val(values, table.gammar[f]) if f in table.gammar else ts[-1],
            "left_tail": None, "right_tail": None,
        }
    for side in ("r", "0"):
        _k_side(table, values, side, funcs)
    return Skeleton(eta, funcs)


def _theta(d, k, u):
    dx = d["breakpoints"][k + 1] - d["breakpoints"][k]
    dy = d["values"][k + 1] - d["values"][k]
    return dx * u - dy


# ---------------------------------------------------------------- alpha bound

@dataclass
class AlphaBound:
    A1: set
    A2: set
    A3: set
    A4: set
    A: set
    m: Fraction
    sup: Fraction            # I = ]0, sup[, or {0} when sup == 0

    @property
    def trivial(self):
        return not self.A


def _segments(d, table, interval):
    """Indices of the function's intervals covered by a literal interval."""
    off = 1 if d["left_tail"] else 0
    lo, hi = table.ind(interval.lo), table.ind(interval.hi)
    segs = [j - 1 + off for j in range(lo, hi)]
    if interval.lo_inf and d["left_tail"]:
        segs.insert(0, 0)
    if interval.hi_inf and d["right_tail"]:
        segs.append(len(d["breakpoints"]) - 2)
    return segs


def alpha_bound(phi3, model, sk: Skeleton | None = None) -> AlphaBound:
    b = _branch(phi3)
    table, values = b.table, _values(model)
    sk = sk or skeleton(phi3, model)
    A1, A2, A3, A4 = set(), set(), set(), set()
    for d in sk.functions.values():
        for k in range(len(d["breakpoints"]) - 1):
            A1.add(abs(_theta(d, k, d["slopes"][k])))
            A1.add(abs(_theta(d, k, d["slopes"][k + 1])))
    for lit in b.body:
        if isinstance(lit, FGt):
            df, dg = sk.functions[lit.f], sk.functions[lit.g]
            a = lit.interval
            for j in range(table.ind(a.lo), table.ind(a.hi) + 1):
                off_f, off_g = (1 if df["left_tail"] else 0), (1 if dg["left_tail"] else 0)
                A2.add(abs(df["values"][j - 1 + off_f] - dg["values"][j - 1 + off_g]) / 2)
            for tf, tg, flag in ((df["left_tail"], dg["left_tail"], a.lo_inf),
                                 (df["right_tail"], dg["right_tail"], a.hi_inf)):
                if flag and tf and tg:
                    A2.add(abs(tf.y_hat - tg.y_hat) / 2)
        elif isinstance(lit, DBound):
            d = sk.functions[lit.f]
            c = Fraction(lit.bound) if lit.bound in ("0", "1") else _val(values, lit.bound)
            for k in _segments(d, table, lit.interval):
                A3.add(abs(_theta(d, k, c)))
        elif isinstance(lit, Shape) and lit.kind in ("StrictUp", "StrictDown"):
            d = sk.functions[lit.f]
            for k in _segments(d, table, lit.interval):
                A4.add(abs(_theta(d, k, Fraction(0))))
    A = {x for x in A1 | A2 | A3 | A4 if x != 0}
    for s in (A1, A2, A3, A4):
        s.discard(Fraction(0))
    m = min(A) / 2 if A else Fraction(0)
    return AlphaBound(A1, A2, A3, A4, A, m, m / 8)


# ---------------------------------------------------------------- assembly

def build_witness(phi3, model, alpha, sk: Skeleton | None = None) -> dict:
    sk = sk or skeleton(phi3, model)
    alpha = Fraction(alpha)
    out = {}
    for f, d in sk.functions.items():
        specs = []
        for k in range(len(d["breakpoints"]) - 1):
            th1 = _theta(d, k, d["slopes"][k])
            th2 = _theta(d, k, d["slopes"][k + 1])
            try:
                specs.append(make_defined(signed_alpha(alpha, th1, th2), th1, th2))
            except NoExistence as e:
                raise ExistenceViolation(f"{f}, interval {k}: {e}") from e
        out[f] = WitnessFunction(
            f, list(d["breakpoints"]), list(d["values"]), list(d["slopes"]),
            d["gamma_left"], d["gamma_right"], specs, d["left_tail"], d["right_tail"], alpha,
        )
    return out


# ---------------------------------------------------------------- verification

@dataclass
class Check:
    literal: str
    ok: bool
    margin: float
    note: str = ""


@dataclass
class Report:
    checks: list = field(default_factory=list)
    stitching: list = field(default_factory=list)      # (function, eta, residual)
    approximate: bool = False

    @property
    def worst_stitch(self):
        return max((r for _, _, r in self.stitching), default=0.0)

    @property
    def ok(self):
        return bool(all(c.ok for c in self.checks) and self.worst_stitch < STITCH_TOL)

    @property
    def failures(self):
        return [c for c in self.checks if not c.ok]

    def to_json(self):
        return {
            "ok": bool(self.ok), "approximate": bool(self.approximate),
            "worst_stitch": float(self.worst_stitch),
            "checks": [{"literal": c.literal, "ok": c.ok, "margin": c.margin, "note": c.note}
                       for c in self.checks],
        }


def _tol(v):
    return 1e-9 * (1 + abs(v))


def _layer(w, k):
    """Width in eta of the steepest boundary layer of interval k."""
    spec = w.pieces[k]
    ds = [abs(float(x)) for pair in spec.d for x in pair] or [0.0]
    return float(w.breakpoints[k + 1] - w.breakpoints[k]) / (2 * (1 + max(ds)))


def stitch_residuals(w: WitnessFunction) -> list:
    """(eta, residual) per breakpoint: closed-form one-sided limits against the
    stored value and slope, and second-order one-sided differences of values
    taken inside each neighbouring interval."""
    out = []
    n = len(w.breakpoints)
    for k in range(n):
        x, y, t = float(w.breakpoints[k]), float(w.values[k]), float(w.slopes[k])
        res = 0.0
        sides = []
        if k > 0:
            sides.append((-1, _layer(w, k - 1), lambda e, j=k - 1: _segment(w, j, e)))
        else:
            sides.append((-1, 1.0, lambda e: _tail_left(w, e)))
        if k < n - 1:
            sides.append((1, _layer(w, k), lambda e, j=k: _segment(w, j, e)))
        else:
            sides.append((1, 1.0, lambda e: _tail_right(w, e)))
        for sign, width, fn in sides:
            v, dv = fn(np.array([x]))
            res = max(res, abs(v[0] - y), abs(dv[0] - t))
            h = min(FD_STEP, 1e-4 * width)
            v, _ = fn(x + sign * h * np.array([0.0, 1.0, 2.0]))
            fd = sign * (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
            res = max(res, abs(fd - t))
        out.append((x, res))
    return out


class _Verifier:
    def __init__(self, b, ws, values, grid_n, approximate):
        self.b, self.ws, self.values = b, ws, values
        self.table = b.table
        self.n = grid_n
        self.approx = approximate
        self.eta = {v: _val(values, v) for v in self.table.chain}

    def ends(self, a):
        lo = None if a.lo == NEG else self.eta[a.lo]
        hi = None if a.hi == POS else self.eta[a.hi]
        return lo, hi

    def empty(self, a):
        lo, hi = self.ends(a)
        if lo is None or hi is None:
            return False
        return lo > hi or (lo == hi and not (a.lo_closed and a.hi_closed))

    def grid(self, fnames, a):
        lo, hi = self.ends(a)
        pts = sorted({x for f in fnames for x in self.ws[f].breakpoints
                      if (lo is None or x >= lo) and (hi is None or x <= hi)})
        if lo is not None and (not pts or pts[0] != lo):
            pts.insert(0, lo)
        if hi is not None and pts[-1] != hi:
            pts.append(hi)
        parts = [np.array([float(x) for x in pts])]
        for x0, x1 in zip(pts, pts[1:]):
            parts.append(np.linspace(float(x0), float(x1), self.n))
        if lo is None:
            x0 = float(pts[0])
            parts += [x0 - np.linspace(0, 1, self.n), x0 - np.linspace(1, 40, self.n),
                      x0 - np.array([1.0, 10.0, 40.0])]
        if hi is None:
            x1 = float(pts[-1])
            parts += [x1 + np.linspace(0, 1, self.n), x1 + np.linspace(1, 40, self.n),
                      x1 + np.array([1.0, 10.0, 40.0])]
        xs = np.unique(np.concatenate(parts))
        return xs, [x for x in pts]

    def interior(self, xs, a):
        lo, hi = self.ends(a)
        keep = np.ones(xs.shape, dtype=bool)
        if lo is not None and not a.lo_closed:
            keep &= xs != float(lo)
        if hi is not None and not a.hi_closed:
            keep &= xs != float(hi)
        return keep

    def exact_points(self, pts, a):
        lo, hi = self.ends(a)
        return [x for x in pts if not ((x == lo and not a.lo_closed) or (x == hi and not a.hi_closed))]

    def cmp(self, diff, strict):
        """Exact rational comparison diff > 0 (or >= 0), tolerant on approximate models."""
        if self.approx:
            return float(diff) > -_tol(float(diff))
        return diff > 0 if strict else diff >= 0

    def check(self, lit) -> Check:
        text = render_literal(lit)
        try:
            ok, margin, note = self._check(lit)
        except MissingVariable as e:
            ok, margin, note = False, float("-inf"), f"missing {e}"
        return Check(text, bool(ok), float(margin), note)

    def _check(self, lit):
        ws, vals = self.ws, self.values
        if isinstance(lit, (ValueLit, SlopeLit)):
            w = ws[lit.f]
            x = self.eta.get(lit.x, _val(vals, lit.x))
            got = eval_witness(w, x) if isinstance(lit, ValueLit) else eval_witness_deriv(w, x)
            want = _val(vals, lit.z)
            k = w.index_of(x)
            exact = (w.values if isinstance(lit, ValueLit) else w.slopes)[k] if k is not None else None
            diff = abs(got - float(want))
            ok = diff <= _tol(float(want))
            if exact is not None and not self.approx:
                ok = ok and exact == want
            return ok, 0.0 - diff, ""
        if isinstance(lit, (FEq, FGt, DBound, Shape)):
            if self.empty(lit.interval):
                return True, math.inf, "vacuous"
            return getattr(self, "_" + type(lit).__name__.lower())(lit)
        if self.approx:
            margins = [atom_margin(a, vals) for a in conjuncts(lit) if isinstance(a, TAtom)]
            ok = all(mg >= -1e-9 for mg in margins) if margins else eval_tarski(lit, vals)
            return ok, min(margins, default=0.0), "tolerant"
        ok = eval_tarski(lit, _DefaultZero(vals))
        margin = atom_margin(lit, _DefaultZero(vals)) if isinstance(lit, TAtom) else 0.0
        return ok, margin, ""

    def _feq(self, lit):
        xs, _ = self.grid([lit.f, lit.g], lit.interval)
        vf, df = eval_witness_array(self.ws[lit.f], xs)
        vg, dg = eval_witness_array(self.ws[lit.g], xs)
        gap = np.maximum(np.abs(vf - vg) - 1e-9 * (1 + np.abs(vf)), np.abs(df - dg) - 1e-9 * (1 + np.abs(df)))
        worst = float(gap.max())
        return worst <= 0, -worst, ""

    def _fgt(self, lit):
        a = lit.interval
        wf, wg = self.ws[lit.f], self.ws[lit.g]
        xs, pts = self.grid([lit.f, lit.g], a)
        keep = self.interior(xs, a)
        vf, _ = eval_witness_array(wf, xs[keep])
        vg, _ = eval_witness_array(wg, xs[keep])
        diff = vf - vg
        margin = float(diff.min()) if diff.size else math.inf
        ok = bool((diff > 0).all())
        for x in self.exact_points(pts, a):
            kf, kg = wf.index_of(x), wg.index_of(x)
            if kf is not None and kg is not None:
                ok = ok and self.cmp(wf.values[kf] - wg.values[kg], True)
        return ok, margin, ""

    def _dbound(self, lit):
        a, w = lit.interval, self.ws[lit.f]
        c = _val(self.values, lit.bound) if lit.bound not in ("0", "1") else Fraction(lit.bound)
        xs, pts = self.grid([lit.f], a)
        keep = self.interior(xs, a)
        _, d = eval_witness_array(w, xs[keep])
        sign = 1 if lit.op in (">", ">=") else -1
        diff = sign * (d - float(c))
        strict = lit.op in (">", "<")
        margin = float(diff.min()) if diff.size else math.inf
        ok = bool((diff > 0).all()) if strict else bool((diff >= -1e-9 * (1 + abs(float(c)))).all())
        for x in self.exact_points(pts, a):
            k = w.index_of(x)
            if k is not None:
                ok = ok and self.cmp(sign * (w.slopes[k] - c), strict)
        return ok, margin, ""

    def _shape(self, lit):
        a, w = lit.interval, self.ws[lit.f]
        xs, pts = self.grid([lit.f], a)
        v, d = eval_witness_array(w, xs)
        if lit.kind in ("StrictUp", "StrictDown"):
            sign = 1 if lit.kind == "StrictUp" else -1
            steps = sign * np.diff(v)
            slope_ok = bool((sign * d >= -1e-9 * (1 + np.abs(d))).all())
            ok = slope_ok and bool((steps > 0).all())
            exact = [w.values[k] for k in (w.index_of(x) for x in pts) if k is not None]
            for y0, y1 in zip(exact, exact[1:]):
                ok = ok and self.cmp(sign * (y1 - y0), True)
            return ok, float(steps.min()) if steps.size else math.inf, ""
        convex = lit.kind in ("Convex", "StrictConvex")
        sign = 1 if convex else -1
        mids = (xs[:-1] + xs[1:]) / 2
        vm, _ = eval_witness_array(w, mids)
        chord = sign * ((v[:-1] + v[1:]) / 2 - vm)
        rise = sign * np.diff(d)
        tol_c = 1e-9 * (1 + np.abs(vm))
        tol_d = 1e-9 * (1 + np.abs(d[1:]))
        margin = float(min(chord.min(), rise.min())) if chord.size else math.inf
        ok = bool((chord >= -tol_c).all() and (rise >= -tol_d).all())
        note = ""
        if lit.kind.startswith("Strict"):
            cert = self._strict_certificate(w, a, convex)
            ok = ok and cert
            note = "structural certificate " + ("holds" if cert else "fails")
        return ok, margin, note

    def _strict_certificate(self, w, a, convex):
        d = {"breakpoints": w.breakpoints, "left_tail": w.left_tail, "right_tail": w.right_tail}
        want = -1 if convex else 1
        for k in _segments(d, self.table, a):
            spec = w.pieces[k]
            if spec.kind != "single" or sgn(spec.theta1) != want:
                return False
        if a.lo_inf:
            lhs = w.slopes[0] - w.gamma_left
            if not (lhs > 0 if convex else lhs < 0):
                return False
        if a.hi_inf:
            rhs = w.gamma_right - w.slopes[-1]
            if not (rhs > 0 if convex else rhs < 0):
                return False
        return True


def verify_witness(phi3, witnesses: dict, model, grid_n=256, approximate=False) -> Report:
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    b = _branch(phi3)
    ver = _Verifier(b, witnesses, _values(model), grid_n, approximate)
    rep = Report(approximate=approximate)
    for lit in b.literals:
        rep.checks.append(ver.check(lit))
    for f, w in witnesses.items():
        for x, r in stitch_residuals(w):
            rep.stitching.append((f, x, r))
    return rep


# ---------------------------------------------------------------- model check and search

STRICT_MARGIN = 1e-9


def model_is_exact(reduced, model) -> bool:
    """Re-check phi4 on the (possibly rationalized) model: non-strict atoms
    exactly, strict atoms with margin at least 1e-9."""
    values = _DefaultZero(_values(model))
    formula = getattr(reduced, "formula", None)
    if formula is None:
        return getattr(model, "exact", True)
    for c in conjuncts(formula):
        try:
            if isinstance(c, TAtom) and c.rel in ("<", ">", "!="):
                if atom_margin(c, values) < STRICT_MARGIN:
                    return False
            elif not eval_tarski(c, values):
                return False
        except ZeroDivisionError:
            return False
    return True


def search_alpha(phi3, model, grid_n=256, max_halvings=40, allow_approximate=False):
    """Halve alpha from sup(I)/2 until the assembled witness verifies."""
    approximate = not model_is_exact(phi3, model)
    if approximate and not allow_approximate:
        raise ApproximateModel("model does not satisfy the reduced formula exactly")
    sk = skeleton(phi3, model)
    ab = alpha_bound(phi3, model, sk)
    if ab.trivial:
        ws = build_witness(phi3, model, 0, sk)
        rep = verify_witness(phi3, ws, model, grid_n, approximate)
        if not rep.ok:
            raise AlphaSearchExhausted(rep, Fraction(0))
        return Fraction(0), ws, rep
    alpha = ab.sup / 2
    rep = None
    for _ in range(max_halvings):
        ws = build_witness(phi3, model, alpha, sk)
        rep = verify_witness(phi3, ws, model, grid_n, approximate)
        if rep.ok:
            return alpha, ws, rep
        alpha /= 2
    raise AlphaSearchExhausted(rep, alpha * 2)


__all__ = [
    "AlphaBound", "AlphaSearchExhausted", "ApproximateModel", "Check", "ExistenceViolation",
    "IncompatibleOrder", "Interval", "Report", "Skeleton", "TailRecord", "WitnessFunction",
    "alpha_bound", "build_witness", "eval_witness", "eval_witness_array", "eval_witness_deriv",
    "model_is_exact", "sample_witness", "search_alpha", "select_interval_points", "skeleton",
    "stitch_residuals", "verify_witness", "witness_csv", "witnesses_from_json", "witnesses_to_json",
]
