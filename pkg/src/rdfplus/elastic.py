"""Elastic bump functions on [0,1] with prescribed end slopes.

An elastic function is a parabola 4a*y*(1-y) composed with an exponential
reparametrisation of [0,1]; it vanishes at both ends and its end slopes are
tuned by the pair d = (d1, d2).  Three composite kinds are built on top:

  single   one elastic function            (theta1 * theta2 < 0)
  double   two half-scale singles           (theta1 * theta2 > 0)
  special  rise, s-shaped fall, flat piece  (exactly one theta is zero)

plus the null function when both slopes vanish.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class NoExistence(ValueError):
    pass


class DomainError(ValueError):
    pass


def sgn(x) -> int:
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class ElasticSpec:
    kind: str                 # single | double | special | null
    alpha: Fraction
    theta1: Fraction
    theta2: Fraction
    d: tuple = ()             # d-pairs per component
    middle: Fraction | None = None
    flip: bool = False        # special only: the flat piece sits at the left end

    def to_json(self):
        return {
            "kind": self.kind, "alpha": str(self.alpha), "theta1": str(self.theta1),
            "theta2": str(self.theta2), "d": [[str(a) for a in p] for p in self.d],
            "middle": None if self.middle is None else str(self.middle), "flip": self.flip,
        }

    @staticmethod
    def from_json(obj):
        return ElasticSpec(
            obj["kind"], Fraction(obj["alpha"]), Fraction(obj["theta1"]), Fraction(obj["theta2"]),
            tuple(tuple(Fraction(a) for a in p) for p in obj["d"]),
            None if obj["middle"] is None else Fraction(obj["middle"]), obj.get("flip", False),
        )


NULL = ElasticSpec("null", Fraction(0), Fraction(0), Fraction(0))


# ---------------------------------------------------------------- construction

def single_params(alpha, theta1, theta2):
    """(d1, d2) of the single-defined function, or None for the null one."""
    alpha, theta1, theta2 = Fraction(alpha), Fraction(theta1), Fraction(theta2)
    if alpha == 0 and theta1 == 0 and theta2 == 0:
        return None
    if not theta1 * theta2 < 0:
        raise NoExistence("single: theta1*theta2 must be negative")
    if not 0 < abs(4 * alpha) <= min(abs(theta1), abs(theta2)):
        raise NoExistence("single: need 0 < |4 alpha| <= min(|theta1|, |theta2|)")
    if sgn(alpha) != sgn(theta1):
        raise NoExistence("single: sign of alpha must match theta1")
    return theta1 / (2 * alpha) - 2, -theta2 / (2 * alpha) - 2


def make_defined(alpha, theta1, theta2) -> ElasticSpec:
    alpha, theta1, theta2 = Fraction(alpha), Fraction(theta1), Fraction(theta2)
    if theta1 == 0 and theta2 == 0:
        if alpha != 0:
            raise NoExistence("zero end slopes allow only alpha = 0")
        return NULL
    if theta1 * theta2 < 0:
        return ElasticSpec("single", alpha, theta1, theta2, (single_params(alpha, theta1, theta2),),
                           Fraction(0))
    if theta1 * theta2 > 0:
        if not 0 < abs(4 * alpha) <= min(abs(theta1), abs(theta2)):
            raise NoExistence("double: need 0 < |4 alpha| <= min(|theta1|, |theta2|)")
        if sgn(alpha) != sgn(theta1):
            raise NoExistence("double: sign of alpha must match theta1")
        mid = -4 * alpha
        left = single_params(alpha / 2, theta1 / 2, mid / 2)
        right = single_params(-alpha / 2, mid / 2, theta2 / 2)
        return ElasticSpec("double", alpha, theta1, theta2, (left, right), mid)
    s = theta1 + theta2
    if not 0 < abs(4 * alpha) <= abs(s):
        raise NoExistence("special: need 0 < |4 alpha| <= |theta1 + theta2|")
    if sgn(alpha) != sgn(s):
        raise NoExistence("special: sign of alpha must match theta1 + theta2")
    return ElasticSpec("special", alpha, theta1, theta2, ((s / (2 * alpha) - 2,),),
                       -2 * alpha, flip=theta1 == 0)


def defined_kind(theta1, theta2) -> str:
    if theta1 == 0 and theta2 == 0:
        return "null"
    if theta1 * theta2 < 0:
        return "single"
    return "double" if theta1 * theta2 > 0 else "special"


def signed_alpha(alpha, theta1, theta2):
    """The amplitude with the sign each kind requires, magnitude |alpha|."""
    a = abs(Fraction(alpha))
    kind = defined_kind(theta1, theta2)
    if kind == "null":
        return Fraction(0)
    s = theta1 if kind in ("single", "double") else theta1 + theta2
    return a if s > 0 else -a


# ---------------------------------------------------------------- evaluation

def _single(a, d1, d2, x, exp=math.exp):
    """Left or right branch of an elastic function; callers pick the branch."""
    u = 2 * x - 1
    return a * (1 - u * u * exp(-2 * d1 * x)), 2 * a * u * (d1 * u - 2) * exp(-2 * d1 * x)


def _single_r(a, d1, d2, x, exp=math.exp):
    u = 2 * x - 1
    e = exp(-2 * d2 * (1 - x))
    return a * (1 - u * u * e), -2 * a * u * (d2 * u + 2) * e


def _rise(h, d, u, exp=math.exp):
    """Left half of an elastic arc stretched to [0,1]: 0 -> h, slope 0 at u=1."""
    w = 1 - u
    e = exp(-d * u)
    return h * (1 - w * w * e), h * w * e * (2 + d * w)


def _scale(vd, k, shift=0.0):
    return vd[0] + shift, k * vd[1]


def _pieces_special(a, d, exp):
    """Special kind with the flat piece on the right (theta2 = 0)."""
    def p1(x):
        return _scale(_rise(a / 2, d, 4 * x, exp), 4)

    def p2(x):
        return _scale(_rise(a / 4, 0.0, 2 - 4 * x, exp), -4, a / 4)

    def p3(x):
        v, dv = _rise(a / 4, 0.0, 4 * x - 2, exp)
        return a / 4 - v, -4 * dv

    def p4(x):
        return 0 * x, 0 * x
    return [(0.0, 0.25, p1), (0.25, 0.5, p2), (0.5, 0.75, p3), (0.75, 1.0, p4)]


def _mirror(pieces):
    """C(x) = -B(1-x) for a piecewise B given by pieces."""
    out = []
    for lo, hi, fn in reversed(pieces):
        def g(x, fn=fn):
            v, dv = fn(1 - x)
            return -v, dv
        out.append((1 - hi, 1 - lo, g))
    return out


def pieces(spec: ElasticSpec, exp=math.exp) -> list:
    """Closed pieces (lo, hi, fn) with fn(x) -> (value, slope)."""
    a = float(spec.alpha)
    if spec.kind == "null":
        return [(0.0, 1.0, lambda x: (0 * x, 0 * x))]
    if spec.kind == "single":
        d1, d2 = (float(v) for v in spec.d[0])
        return [(0.0, 0.5, lambda x: _single(a, d1, d2, x, exp)),
                (0.5, 1.0, lambda x: _single_r(a, d1, d2, x, exp))]
    if spec.kind == "double":
        (l1, l2), (r1, r2) = ((float(v) for v in p) for p in spec.d)
        return [
            (0.0, 0.25, lambda x: _scale(_single(a / 2, l1, l2, 2 * x, exp), 2)),
            (0.25, 0.5, lambda x: _scale(_single_r(a / 2, l1, l2, 2 * x, exp), 2)),
            (0.5, 0.75, lambda x: _scale(_single(-a / 2, r1, r2, 2 * x - 1, exp), 2)),
            (0.75, 1.0, lambda x: _scale(_single_r(-a / 2, r1, r2, 2 * x - 1, exp), 2)),
        ]
    base = _pieces_special(a, float(spec.d[0][0]), exp)
    return _mirror(base) if spec.flip else base


def _eval(spec: ElasticSpec, x: float):
    ps = pieces(spec)
    for lo, hi, fn in ps:
        if x <= hi:
            return fn(x)
    return ps[-1][2](x)


def eval_array(spec: ElasticSpec, xs):
    """Vectorised (values, slopes) over a numpy array of points in [0,1]."""
    xs = np.asarray(xs, dtype=float)
    if xs.size and (xs.min() < 0 or xs.max() > 1):
        raise DomainError("points outside [0,1]")
    vals = np.zeros_like(xs)
    ders = np.zeros_like(xs)
    done = np.zeros(xs.shape, dtype=bool)
    for lo, hi, fn in pieces(spec, np.exp):
        mask = (xs <= hi) & ~done
        if mask.any():
            v, dv = fn(xs[mask])
            vals[mask], ders[mask] = v, dv
            done |= mask
    return vals, ders


def _check(x):
    if not 0 <= x <= 1:
        raise DomainError(f"{x} outside [0,1]")
    return float(x)


def eval_elastic(spec: ElasticSpec, x) -> float:
    return _eval(spec, _check(x))[0]


def eval_elastic_deriv(spec: ElasticSpec, x) -> float:
    return _eval(spec, _check(x))[1]


def stitch_residuals(spec: ElasticSpec) -> list:
    """(cut, value gap, slope gap) between adjacent pieces, closed form."""
    ps = pieces(spec)
    out = []
    for (_, hi, f), (lo, _, g) in zip(ps, ps[1:]):
        (v1, d1), (v2, d2) = f(hi), g(lo)
        out.append((hi, abs(v1 - v2), abs(d1 - d2)))
    return out


def sample(spec: ElasticSpec, n: int) -> list:
    """n evenly spaced rows (x, value, derivative) over [0,1]."""
    if n < 2:
        raise ValueError("need at least two sample points")
    out = []
    for k in range(n):
        x = k / (n - 1)
        v, dv = _eval(spec, x)
        out.append((x, v, dv))
    return out
