import random
from fractions import Fraction as F

import pytest

from rdfplus.parser import parse_term
from rdfplus.smt import (
    ModelParseError, Sat, SolverNotFound, SolverProtocolError, SolverTimeout, Unsat, emit_smtlib,
    parse_model, rationalize, read_sexprs, solve_external,
)
from rdfplus.syntax import Const0, Div, Mul, Sub, Var
from rdfplus.tarski import (
    MissingVariable, PolyAtom, TAnd, TAtom, TImplies, TOr, UnknownSignDenominator, clear_divisions,
    eval_tarski, poly_of,
)

solver = pytest.mark.solver


def T(rel, lhs, rhs):
    return TAtom(rel, parse_term(lhs) if isinstance(lhs, str) else lhs,
                 parse_term(rhs) if isinstance(rhs, str) else rhs)


SECANT = Div(Sub(Var("y2"), Var("y1")), Sub(Var("v2"), Var("v1")))


# ---------------------------------------------------------------- clear_divisions

def test_secant_multiplied_through():
    phi = TAtom(">", SECANT, Var("c"))
    got = clear_divisions(phi, [Sub(Var("v2"), Var("v1"))])
    want = poly_of(Sub(Var("y2"), Var("y1"))) - poly_of(Mul(Var("c"), Sub(Var("v2"), Var("v1"))))
    assert got == PolyAtom.make(want, ">")


def test_unknown_sign_uses_product_encoding():
    phi = T("=", "s", Div(Var("t1"), Var("t2")))
    got = clear_divisions(phi)
    assert isinstance(got, TAnd) and len(got.args) == 2
    square = PolyAtom.make(poly_of(Mul(Var("t2"), Var("t2"))), ">")
    assert square in got.args
    with pytest.raises(UnknownSignDenominator):
        clear_divisions(phi, allow_product=False)


def test_division_free_formula_keeps_its_meaning():
    phi = TAnd((T(">", "x", "y"), TOr((T("=", "x", "0"), T("<=", "y * y", "x")))))
    got = clear_divisions(phi)
    rng = random.Random(1)
    for _ in range(200):
        env = {"x": F(rng.randint(-4, 4)), "y": F(rng.randint(-4, 4))}
        assert eval_tarski(got, env) == eval_tarski(phi, env)


@pytest.mark.parametrize("rel", ["=", "<", ">", "<=", ">=", "!="])
def test_clear_divisions_equivalence_random(rel):
    rng = random.Random(rel)
    lhs = Div(Sub(Var("y2"), Var("y1")), Sub(Var("v2"), Var("v1")))
    rhs = Div(Var("a"), Var("b"))
    phi = TAtom(rel, lhs, rhs)
    cleared = clear_divisions(phi, [Sub(Var("v2"), Var("v1"))])
    for _ in range(2000):
        v1 = F(rng.randint(-5, 5), rng.randint(1, 3))
        env = {"v1": v1, "v2": v1 + F(rng.randint(1, 6), rng.randint(1, 3))}
        for n in ("y1", "y2", "a", "b"):
            env[n] = F(rng.randint(-4, 4), rng.randint(1, 3))
        assert eval_tarski(cleared, env) == eval_tarski(phi, env)


def test_eval_tarski_basics():
    assert eval_tarski(T(">", "x", "0"), {"x": 1})
    assert not eval_tarski(TAtom(">", SECANT, Const0()), {"y1": 2, "y2": 2, "v1": 0, "v2": 1})
    assert not eval_tarski(TAtom(">", SECANT, Const0()), {"y1": 0, "y2": 1, "v1": 1, "v2": 1})
    with pytest.raises(MissingVariable):
        eval_tarski(T(">", "x", "y"), {"x": 1})


def test_walkthrough_contradiction_under_equal_values():
    # y3 = y2 with v2 < v3 violates the positive secant between them
    phi = TAnd((TAtom(">", Div(Sub(Var("y3"), Var("y2")), Sub(Var("v3"), Var("v2"))), Const0()),
                T("<=", "y3", "y2")))
    assert not eval_tarski(phi, {"y2": 1, "y3": 1, "v2": 0, "v3": 2})


# ---------------------------------------------------------------- emission

def test_emit_contains_assert():
    script = emit_smtlib(T(">", "x", "0"))
    assert "(assert (> x 0.0))" in script
    assert script.index("(set-logic QF_NRA)") < script.index("(declare-const x Real)")
    assert script.rstrip().endswith("(exit)")


def test_emit_keeps_implication_structure():
    guard = TImplies(T("=", "s", "c"), TAnd((T("=", "t1", "c"), T("=", "t2", "c"))))
    script = emit_smtlib(guard)
    (line,) = [ln for ln in script.splitlines() if ln.startswith("(assert")]
    (sx,) = read_sexprs(line)
    assert sx[0] == "assert" and sx[1][0] == "=>"
    assert sx[1][1][0] == "=" and sx[1][2][0] == "and"


def test_emit_rejects_divisions():
    with pytest.raises(ValueError):
        emit_smtlib(TAtom(">", SECANT, Const0()))


def test_emitted_scripts_are_balanced():
    from rdfplus.decide import prepare
    from rdfplus.parser import parse_formula
    for b in prepare(parse_formula("Convex(f) on [a,b] & Gt(f,g) on (a,+inf) & f(a) > 1/2")):
        body = "\n".join(ln for ln in b.script.splitlines() if not ln.startswith(";"))
        assert all(isinstance(x, list) for x in read_sexprs(body))


# ---------------------------------------------------------------- models

def test_parse_model_exact_values():
    m = parse_model("(model (define-fun x () Real (/ 1 3)) (define-fun y () Real (- 2.5)))")
    assert m.assignment == {"x": F(1, 3), "y": F(-5, 2)}
    assert m.exact


def test_parse_model_root_object():
    text = "((define-fun x () Real (root-obj (+ (^ x 2) (- 2)) 2)))"
    m = parse_model(text)
    assert not m.exact
    x = m["x"]
    assert abs(x * x - 2) < F(1, 10**11)
    assert x > 0


def test_parse_model_decimal_approximation():
    m = parse_model("((define-fun x () Real 1.4142135623?))")
    assert not m.exact and m["x"] == rationalize(F("1.4142135623"))


def test_parse_model_errors():
    with pytest.raises(ModelParseError):
        parse_model("((define-fun x () Real (foo 1))")
    with pytest.raises(ModelParseError):
        parse_model("((define-fun x () Real (bar 1)))")


def _convergents(x):
    """Continued-fraction convergents of a rational, computed by hand."""
    h0, h1, k0, k1 = 0, 1, 1, 0
    out = []
    while True:
        a = x.numerator // x.denominator
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(F(h1, k1))
        frac = x - a
        if frac == 0:
            return out
        x = 1 / frac


def test_rationalize_against_convergents():
    rng = random.Random(4)
    for _ in range(200):
        x = F(rng.randint(1, 10**15), rng.randint(1, 10**15))
        q = rationalize(x)
        assert abs(q - x) <= F(1, 10**12)
        first = next(c for c in _convergents(x) if abs(c - x) <= F(1, 10**12))
        assert q.denominator <= first.denominator


# ---------------------------------------------------------------- solver

@solver
def test_solver_unsat():
    assert isinstance(solve_external(emit_smtlib(TAnd((T(">", "x", "0"), T("<", "x", "0"))))), Unsat)


@solver
def test_solver_irrational_model_is_flagged():
    res = solve_external(emit_smtlib(TAnd((T("=", "x * x", "1 + 1"), T(">", "x", "0")))))
    assert isinstance(res, Sat)
    assert not res.model.exact
    assert abs(float(res.model["x"]) ** 2 - 2) < 1e-11


@solver
def test_solver_exact_model_satisfies_formula():
    phi = TAnd((T(">", "x", "y"), T("=", "x + y", "1"), T(">=", "y * y", "x")))
    res = solve_external(emit_smtlib(phi))
    assert isinstance(res, Sat) and res.model.exact
    assert eval_tarski(phi, res.model)


@solver
def test_walkthrough_phi4_is_unsat():
    from rdfplus.eliminate import branches_of, step1_endpoints, step2_negatives, step3_evaluate, step4_eliminate
    from rdfplus.normalize import DBound
    from rdfplus.parser import parse_formula
    phi = parse_formula("(D[f] > 0) on (a,b) -> StrictUp(f) on [a,b]")
    ordered, fresh = branches_of(phi, "validity")
    (main,) = [b for b in ordered if b.chain == ["a", "b"]]
    (closed,) = [b for b in step1_endpoints(main, fresh)
                 if all(d.interval.lo_closed and d.interval.hi_closed for d in b.body if isinstance(d, DBound))]
    (four,) = [b for b in step2_negatives(closed, fresh) if len(b.chain) == 4]
    red = step4_eliminate(step3_evaluate(four, fresh))
    script = emit_smtlib(clear_divisions(red.formula, red.known_positive))
    decls = [ln for ln in script.splitlines() if ln.startswith("(declare-const")]
    # four chain points, four values, four slopes, and the two witness values
    assert len(decls) == 14
    assert isinstance(solve_external(script), Unsat)


def test_missing_solver():
    with pytest.raises(SolverNotFound):
        solve_external("(check-sat)\n", "definitely-not-a-solver-binary")


def test_solver_timeout(tmp_path):
    script = tmp_path / "slow.sh"
    script.write_text("#!/bin/sh\nsleep 5\n")
    script.chmod(0o755)
    with pytest.raises(SolverTimeout):
        solve_external("(check-sat)\n", str(script), timeout=0.2)


def test_solver_protocol_error(tmp_path):
    script = tmp_path / "chatty.sh"
    script.write_text("#!/bin/sh\necho hello\n")
    script.chmod(0o755)
    with pytest.raises(SolverProtocolError):
        solve_external("(check-sat)\n", str(script))


def test_env_variable_selects_solver(monkeypatch):
    monkeypatch.setenv("RDF_SOLVER_CMD", "definitely-not-a-solver-binary -in")
    with pytest.raises(SolverNotFound):
        solve_external("(check-sat)\n")


def test_rationalize_minimal_denominator_brute_force():
    import math
    rng = random.Random(8)
    tol = F(1, 1000)
    for _ in range(300):
        x = F(rng.randint(-10**6, 10**6), rng.randint(1, 10**6))
        q = rationalize(x, tol)
        assert abs(q - x) <= tol
        for d in range(1, q.denominator):
            n = math.ceil((x - tol) * d)
            assert F(n, d) > x + tol, (x, q, d)
