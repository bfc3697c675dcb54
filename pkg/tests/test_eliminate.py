import json

import pytest
from hypothesis import given, strategies as st

from rdfplus.eliminate import (
    Branch, pipeline, step1_endpoints, step2_negatives, step3_evaluate, step4_eliminate,
)
from rdfplus.normalize import (
    INTERVAL_LITS, NEG, POS, DBound, FEq, FGt, FInterval, Shape, SlopeLit, ValueLit,
)
from rdfplus.parser import parse_formula
from rdfplus.syntax import Const0, Div, Fresh, Sub, Var
from rdfplus.tarski import TAtom, TImplies, eval_tarski, free_vars


def closed(lo, hi):
    return FInterval(lo, hi, True, True)


def reduce(body, chain):
    return step4_eliminate(step3_evaluate(Branch(body, list(chain)), Fresh()))


def conjuncts(red):
    return list(red.formula.args)


def body_atoms(red):
    """Conjuncts other than the chain literals."""
    chain = red.branch.chain
    skip = {TAtom(">", Var(b), Var(a)) for a, b in zip(chain, chain[1:])}
    return [c for c in conjuncts(red) if c not in skip]


def V(n):
    return Var(n)


# ---------------------------------------------------------------- step 1

def test_open_gt_splits_four_ways_with_midpoint():
    out = step1_endpoints(Branch([FGt("f", "g", FInterval("a", "b", False, False))], ["a", "b"]), Fresh())
    assert len(out) == 4
    shapes = set()
    for b in out:
        (gt,) = [lit for lit in b.body if isinstance(lit, FGt)]
        shapes.add((gt.interval.lo_closed, gt.interval.hi_closed))
    assert shapes == {(True, True), (True, False), (False, True), (False, False)}
    (both,) = [b for b in out if len(b.chain) == 3]
    mid = both.chain[1]
    assert TAtom("<", V("a"), V(mid)) in both.body and TAtom("<", V(mid), V("b")) in both.body
    assert any(isinstance(lit, ValueLit) and lit.x == mid for lit in both.body)


def test_closed_literals_pass_through():
    body = [Shape("Convex", "f", closed("a", "b")), FGt("f", "g", closed("a", "b"))]
    (out,) = step1_endpoints(Branch(body, ["a", "b"]), Fresh())
    assert out.body == body and out.chain == ["a", "b"]


@pytest.mark.parametrize("lit", [
    FGt("f", "g", FInterval("a", POS, True, False)),
    FGt("f", "g", FInterval(NEG, POS, False, False)),
    DBound("f", ">", "c", FInterval(NEG, "a", False, True)),
    DBound("f", "<", "c", FInterval("a", POS, False, False)),
    FGt("f", "g", FInterval(NEG, "a", False, False)),
])
def test_no_open_infinite_end_survives(lit):
    """Unbounded intervals keep only a closed finite end after step 1."""
    for b in step1_endpoints(Branch([lit], ["a"]), Fresh()):
        for x in b.body:
            if isinstance(x, (FGt, DBound)):
                a = x.interval
                if a.hi_inf and not a.lo_inf:
                    assert a.lo_closed, x
                if a.lo_inf and not a.hi_inf:
                    assert a.hi_closed, x


def test_empty_interval_literal_is_dropped():
    out = step1_endpoints(Branch([Shape("Convex", "f", FInterval("a", "a", False, True))], ["a"]), Fresh())
    assert [b.body for b in out] == [[]]


# ---------------------------------------------------------------- step 2

def test_negated_strict_up_gets_witness_pair():
    (b,) = step2_negatives(Branch([Shape("StrictUp", "f", closed("z1", "z2"), True)], ["z1", "z2"]),
                           Fresh())[:1]
    assert b.trace[0] == ("2d", "!StrictUp(f) on [z1,z2]")
    vals = [lit for lit in b.body if isinstance(lit, ValueLit)]
    assert len(vals) == 2
    y1, y2 = vals[0].z, vals[1].z
    assert TAtom(">=", V(y1), V(y2)) in b.body
    assert not any(isinstance(lit, INTERVAL_LITS) and lit.neg for lit in b.body)


def test_negated_convex_gets_strict_product_inequality():
    out = step2_negatives(Branch([Shape("Convex", "f", closed("z1", "z2"), True)], ["z1", "z2"]), Fresh())
    assert out
    for b in out:
        assert b.trace[0][0] == "2e"
        assert any(isinstance(lit, TAtom) and lit.rel == ">" and type(lit.lhs).__name__ == "Mul"
                   for lit in b.body)


def test_positive_branch_is_unchanged_by_step2():
    b = Branch([Shape("Convex", "f", closed("a", "b"))], ["a", "b"])
    (out,) = step2_negatives(b, Fresh())
    assert out.body == b.body and out.chain == b.chain


def test_no_negations_after_step2_on_corpus():
    for src in ["(D[f] > 0) on (a,b) -> StrictUp(f) on [a,b]",
                "Convex(f) on [a,b] & a < b -> !(Gt(g,f) on [a,b])"]:
        for red in pipeline(parse_formula(src), "validity"):
            assert not any(isinstance(lit, INTERVAL_LITS) and lit.neg for lit in red.branch.body)


# ---------------------------------------------------------------- step 3

def test_step3_walkthrough_counts():
    body = [Shape("StrictUp", "f", closed("v1", "v4")), ValueLit("y2", "f", "v2"), ValueLit("y3", "f", "v3")]
    b = step3_evaluate(Branch(body, ["v1", "v2", "v3", "v4"]))
    new = b.body[len(body):]
    defs = [lit for lit in new if isinstance(lit, (ValueLit, SlopeLit))]
    assert len(defs) == 8
    assert TAtom("=", V("y2"), V(b.table.y["f", 2])) in new
    assert TAtom("=", V("y3"), V(b.table.y["f", 3])) in new


def test_step3_two_functions():
    b = step3_evaluate(Branch([FGt("f", "g", closed("a", "b"))], ["a", "b"]))
    assert len(b.body) - 1 == 8


def test_step3_without_functions_is_identity():
    body = [TAtom(">", V("x"), V("y"))]
    b = step3_evaluate(Branch(body, []))
    assert b.body == body


def test_step3_one_definition_per_function_and_point():
    b = step3_evaluate(Branch([FGt("f", "g", closed("a", "c")), ValueLit("z", "f", "b")], ["a", "b", "c"]))
    for f in ("f", "g"):
        for j, v in enumerate(b.chain, 1):
            assert sum(1 for lit in b.body if isinstance(lit, ValueLit) and lit.f == f and lit.x == v
                       and lit.z == b.table.y[f, j]) == 1
            assert sum(1 for lit in b.body if isinstance(lit, SlopeLit) and lit.f == f and lit.x == v) == 1


# ---------------------------------------------------------------- step 4

def test_eq_on_left_ray():
    red = reduce([FEq("f", "g", FInterval(NEG, "v1", False, True))], ["v1"])
    assert set(conjuncts(red)) == {
        TAtom("=", V("_y_f_1"), V("_y_g_1")), TAtom("=", V("_t_f_1"), V("_t_g_1")),
        TAtom("=", V("_g0_f"), V("_g0_g")),
    }


def test_strict_up_on_a_point():
    red = reduce([Shape("StrictUp", "f", closed("v1", "v1"))], ["v1"])
    assert conjuncts(red) == [TAtom(">=", V("_t_f_1"), Const0())]


def test_no_function_symbols_after_step4():
    for red in pipeline(parse_formula("Gt(f,g) on [a,+inf) & Convex(f) on (-inf,b] & D[g](a) > f(b)")):
        for c in red.formula.args:
            assert not isinstance(c, INTERVAL_LITS + (ValueLit, SlopeLit))
        t = red.branch.table
        names = set(t.y.values()) | set(t.t.values()) | set(t.gamma0.values()) | set(t.gammar.values())
        names |= set(t.k0.values()) | set(t.kr.values()) | set(t.chain)
        for n in free_vars(red.formula):
            assert n in names or not n.startswith("_") or n.startswith("_t"), n


def test_pure_arithmetic_pipeline():
    (red,) = pipeline(parse_formula("x > x"))
    assert conjuncts(red) == [TAtom(">", V("x"), V("x"))]


def test_sat_probe_admits_hand_model():
    reds = pipeline(parse_formula("StrictUp(f) on [a,b] & f(a)=0 & f(b)=1 & a<b"))
    ok = []
    for red in reds:
        if red.branch.chain != ["a", "b"]:
            continue
        env = {n: 0 for n in free_vars(red.formula)}
        env.update({"a": 0, "b": 1, "_y_f_1": 0, "_y_f_2": 1, "_t_f_1": 1, "_t_f_2": 1})
        for c in red.formula.args:
            if isinstance(c, TAtom) and c.rel == "=" and isinstance(c.lhs, Var) and isinstance(c.rhs, Var):
                if c.rhs.name in ("_y_f_1", "_y_f_2"):
                    env[c.lhs.name] = env[c.rhs.name]
        for c in red.formula.args:
            if isinstance(c, TAtom) and c.rel == "=" and isinstance(c.lhs, Var) and c.rhs in (Const0(),):
                env[c.lhs.name] = 0
        ok.append(eval_tarski(red.formula, env))
    assert any(ok)


# naive re-derivation of the per-literal encodings from index ranges

@given(st.integers(1, 6).flatmap(lambda r: st.tuples(st.just(r), st.integers(1, r), st.integers(1, r))))
def test_strict_up_index_arithmetic(rij):
    r, i, j = rij
    i, j = min(i, j), max(i, j)
    chain = [f"v{k}" for k in range(1, r + 1)]
    red = reduce([Shape("StrictUp", "f", closed(chain[i - 1], chain[j - 1]))], chain)
    want = {TAtom(">=", V(f"_t_f_{k}"), Const0()) for k in range(i, j + 1)}
    want |= {TAtom(">", V(f"_y_f_{k + 1}"), V(f"_y_f_{k}")) for k in range(i, j)}
    assert set(body_atoms(red)) == want


@given(st.integers(1, 6).flatmap(lambda r: st.tuples(st.just(r), st.integers(1, r), st.integers(1, r))),
       st.sampled_from([">=", "<="]))
def test_derivative_bound_index_arithmetic(rij, op):
    r, i, j = rij
    i, j = min(i, j), max(i, j)
    chain = [f"v{k}" for k in range(1, r + 1)]
    red = reduce([DBound("f", op, "c", closed(chain[i - 1], chain[j - 1]))], chain)
    got = body_atoms(red)
    slopes = [a for a in got if isinstance(a, TAtom) and isinstance(a.lhs, Var)]
    secants = [a for a in got if isinstance(a, TAtom) and isinstance(a.lhs, Div)]
    guards = [a for a in got if isinstance(a, TImplies)]
    assert set(slopes) == {TAtom(op, V(f"_t_f_{k}"), V("c")) for k in range(i, j + 1)}
    assert len(secants) == len(guards) == j - i
    for k, s in zip(range(i, j), secants):
        assert s.lhs == Div(Sub(V(f"_y_f_{k + 1}"), V(f"_y_f_{k}")), Sub(V(f"v{k + 1}"), V(f"v{k}")))


@given(st.integers(2, 6).flatmap(lambda r: st.tuples(st.just(r), st.integers(1, r), st.integers(1, r))))
def test_convex_index_arithmetic(rij):
    r, i, j = rij
    i, j = min(i, j), max(i, j)
    chain = [f"v{k}" for k in range(1, r + 1)]
    red = reduce([Shape("Convex", "f", closed(chain[i - 1], chain[j - 1]))], chain)
    got = body_atoms(red)
    guards = [a for a in got if isinstance(a, TImplies)]
    assert len(guards) == j - i
    assert len(got) == 3 * (j - i)


def test_trace_is_json():
    red = reduce([DBound("f", ">=", "c", closed("v1", "v2"))], ["v1", "v2"])
    trace = json.loads(red.branch.trace_json())
    assert [t["rule"] for t in trace] == ["3", "4c", "4c", "4c", "4c", "4i"]
    assert all(set(t) == {"rule", "literal"} for t in trace)


def test_walkthrough_branch_count():
    reds = pipeline(parse_formula("(D[f] > 0) on (a,b) -> StrictUp(f) on [a,b]"), "validity")
    assert len(reds) >= 4
