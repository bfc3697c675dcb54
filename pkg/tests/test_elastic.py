import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from rdfplus.elastic import (
    DomainError, ElasticSpec, NoExistence, eval_array, eval_elastic, eval_elastic_deriv, make_defined, sample,
    signed_alpha, single_params,
)


def test_single_params_examples():
    assert single_params(1, 6, -12) == (1, 4)
    assert single_params(0, 0, 0) is None
    with pytest.raises(NoExistence):
        single_params(1, 1, -1)


def test_make_defined_examples():
    d = make_defined(F(1, 10), 1, 3)
    assert d.kind == "double" and d.middle == F(-2, 5)
    assert make_defined(F(1, 10), 2, 0).kind == "special"
    assert make_defined(0, 0, 0).kind == "null"


@pytest.mark.parametrize("args", [(1, 1, -1), (-1, 8, -8), (0, 1, -1), (1, 1, 1), (-F(1, 4), 1, 1),
                                  (F(1, 2), 0, 1), (-F(1, 8), 1, 0), (1, 0, 0)])
def test_make_defined_rejects(args):
    with pytest.raises(NoExistence):
        make_defined(*args)


def test_single_anchor_values():
    s = make_defined(1, 6, -12)
    assert eval_elastic(s, 0.5) == 1.0
    assert abs(eval_elastic(s, 0.25) - (1 - 0.25 * math.exp(-0.5))) < 1e-15
    assert abs(eval_elastic(s, 0.25) - oracles.elastic_composed(1, 1, 4, 0.25)) < 1e-15
    assert eval_elastic_deriv(s, 0) == 6.0
    assert eval_elastic_deriv(s, 0.5) == 0.0


def test_domain_error():
    s = make_defined(1, 6, -12)
    with pytest.raises(DomainError):
        eval_elastic(s, 1.5)
    with pytest.raises(DomainError):
        eval_elastic_deriv(s, -0.1)
    with pytest.raises(DomainError):
        eval_array(s, np.array([0.2, 1.01]))


def _single(rng, ratio=8):
    t1 = rng.choice([-1, 1]) * F(rng.randint(8, 64), 16)
    t2 = -t1 * F(rng.randint(16, 16 * ratio), 16) / ratio
    bound = min(abs(t1), abs(t2))
    a = bound / 4 * F(rng.randint(1, 100), 100)
    return make_defined(a if t1 > 0 else -a, t1, t2)


def test_single_matches_definition_by_composition():
    rng = random.Random(2)
    xs = np.linspace(0, 1, 201)
    for _ in range(200):
        s = _single(rng)
        a, t1, t2 = s.alpha, s.theta1, s.theta2
        d1, d2 = t1 / (2 * a) - 2, -t2 / (2 * a) - 2
        want = [oracles.elastic_composed(float(a), float(d1), float(d2), x) for x in xs]
        got, _ = eval_array(s, xs)
        assert np.max(np.abs(got - want)) < 1e-12


def test_double_matches_its_two_halves():
    """Left half is a single with slopes theta1/2 and -2 alpha, right half a
    single with slopes -2 alpha and theta2/2, each on a half-width interval."""
    rng = random.Random(3)
    for _ in range(100):
        t1 = rng.choice([-1, 1]) * F(rng.randint(8, 64), 16)
        t2 = t1 / abs(t1) * F(rng.randint(8, 64), 16)
        a = min(abs(t1), abs(t2)) / 4 * F(rng.randint(1, 100), 100)
        a = a if t1 > 0 else -a
        s = make_defined(a, t1, t2)
        l1, l2 = (t1 / 2) / a - 2, (4 * a / 2) / a - 2
        r1, r2 = (-4 * a / 2) / (-a) - 2, -(t2 / 2) / (-a) - 2
        for x in np.linspace(0, 1, 101):
            if x <= 0.5:
                want = oracles.elastic_composed(float(a) / 2, float(l1), float(l2), 2 * x)
            else:
                want = oracles.elastic_composed(-float(a) / 2, float(r1), float(r2), 2 * x - 1)
            assert abs(eval_elastic(s, x) - want) < 1e-12


def _moderate(kind, rng):
    """Specs with slope ratio <= 2 and |4 alpha| >= half its bound, so every
    steepness parameter stays below 6."""
    t1 = rng.choice([-1, 1]) * F(rng.randint(16, 32), 16)
    t2 = t1 * F(rng.randint(16, 32), 16) / abs(t1) * (1 if kind == "double" else -1)
    if kind == "special":
        t1, t2 = (t1, F(0)) if rng.random() < 0.5 else (F(0), t1)
    bound = abs(t1 + t2) if kind == "special" else min(abs(t1), abs(t2))
    a = bound / 4 * F(rng.randint(50, 100), 100)
    return make_defined(signed_alpha(a, t1, t2), t1, t2)


def test_single_sign_law():
    rng = random.Random(4)
    xs = np.linspace(0.001, 0.999, 1000)
    xs = xs[np.abs(xs - 0.5) > 1e-3]
    h = 1e-5
    for _ in range(200):
        s = _moderate("single", rng)
        _, dp = eval_array(s, np.clip(xs + h, 0, 1))
        _, dm = eval_array(s, np.clip(xs - h, 0, 1))
        second = (dp - dm) / (2 * h)
        want = -oracles.sgn(s.theta1)
        assert np.all(np.sign(second) == want)


@pytest.mark.parametrize("kind", ["single", "double", "special"])
def test_slope_transfer(kind):
    rng = random.Random(kind)
    xs = np.linspace(0, 1, 1000)
    for _ in range(200):
        s = _moderate(kind, rng) if rng.random() < 0.5 else _wide(kind, rng)
        ends = [s.theta1, s.theta2] + ([s.middle] if s.middle is not None else [])
        lo, hi = float(min(ends)), float(max(ends))
        _, d = eval_array(s, xs)
        assert np.all(d <= hi + 1e-12) and np.all(d >= lo - 1e-12)


def _wide(kind, rng):
    from test_acceptance import random_constructible
    return make_defined(*random_constructible(kind, rng))


def test_derivative_against_finite_differences():
    rng = random.Random(6)
    xs = np.linspace(0.01, 0.99, 64)
    h = 1e-6
    for kind in ("single", "double", "special"):
        for _ in range(50):
            s = _moderate(kind, rng)
            vp, _ = eval_array(s, xs + h)
            vm, _ = eval_array(s, xs - h)
            _, d = eval_array(s, xs)
            assert np.max(np.abs((vp - vm) / (2 * h) - d)) <= 1e-6


@settings(max_examples=200)
@given(st.integers(-40, 40), st.integers(-40, 40), st.integers(1, 100), st.integers(1, 5))
def test_uniqueness(n1, n2, p, k):
    t1, t2 = F(n1, 8), F(n2, 8)
    kind = "null" if t1 == t2 == 0 else None
    bound = abs(t1 + t2) if t1 * t2 == 0 else min(abs(t1), abs(t2))
    a = signed_alpha(bound / 4 * F(p, 100), t1, t2)
    if kind == "null":
        a = F(0)
    s1 = make_defined(a, t1, t2)
    # the same numbers written with different denominators
    s2 = make_defined(F(a.numerator * k, a.denominator * k), F(n1 * k, 8 * k), F(n2 * k, 8 * k))
    xs = np.linspace(0, 1, 257)
    v1, d1 = eval_array(s1, xs)
    v2, d2 = eval_array(s2, xs)
    assert np.max(np.abs(v1 - v2)) <= 1e-12 and np.max(np.abs(d1 - d2)) <= 1e-12


@pytest.mark.parametrize("kind", ["single", "double", "special"])
def test_magnitude_monotonicity(kind):
    rng = random.Random("mag" + kind)
    xs = np.linspace(0, 1, 1000)
    for _ in range(200):
        s = _moderate(kind, rng)
        small = s.alpha * F(rng.randint(1, 99), 100)
        g = make_defined(small, s.theta1, s.theta2)
        vf, _ = eval_array(s, xs)
        vg, _ = eval_array(g, xs)
        assert np.all(np.abs(vf) >= np.abs(vg) - 1e-15)


def test_special_shape():
    for t1, t2 in [(2, 0), (0, 2), (-2, 0), (0, -1)]:
        s = make_defined(signed_alpha(F(1, 10), t1, t2), t1, t2)
        assert eval_elastic(s, 0) == 0 and eval_elastic(s, 1) == 0
        assert abs(eval_elastic_deriv(s, 0) - t1) < 1e-12 and abs(eval_elastic_deriv(s, 1) - t2) < 1e-12
        assert abs(eval_elastic_deriv(s, 0.5) - float(s.middle)) < 1e-12
        v, _ = eval_array(s, np.linspace(0, 1, 4001))
        assert np.max(np.abs(v)) <= abs(float(s.alpha)) / 2 + 1e-12


def test_null_and_sample():
    rows = sample(make_defined(0, 0, 0), 16)
    assert all(v == 0 and dv == 0 for _, v, dv in rows)
    rows = sample(make_defined(1, 6, -12), 512)
    assert len(rows) == 512 and rows[0][0] == 0 and rows[-1][0] == 1
    assert max(v for _, v, _ in rows) <= 1.0
    with pytest.raises(ValueError):
        sample(make_defined(1, 6, -12), 1)


def test_json_round_trip():
    for args in [(1, 6, -12), (F(1, 10), 1, 3), (F(1, 10), 2, 0), (F(-1, 10), 0, -2), (0, 0, 0)]:
        s = make_defined(*args)
        assert ElasticSpec.from_json(s.to_json()) == s
