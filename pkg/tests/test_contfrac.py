from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasilab.contfrac import (Frequency, best_approx_holds, best_approx_verify, convergents,
                               is_bounded_type, lower_bound_holds, sandwich_check, torus_dist)
from quasilab.errors import InsufficientPrecision, InvalidInput


class RationalStub:
    """Exact rational stand-in exposing the enclosure interface."""

    def __init__(self, value: Fraction):
        self.value = value

    def enclosure(self, k, tol):
        return self.value, self.value


def cf_value(quotients):
    x = mpmath.mpf(0)
    for a in reversed(quotients):
        x = 1 / (a + x)
    return x


def test_golden_denominators_are_fibonacci():
    g = Frequency.golden()
    assert [g.q(n) for n in range(1, 7)] == [1, 2, 3, 5, 8, 13]


def test_silver_denominators():
    s = Frequency.silver()
    assert [s.q(n) for n in range(1, 5)] == [2, 5, 12, 29]


def test_arithmetic_rule_against_bessel_ratio():
    a = Frequency.from_rule("arithmetic", start=1, step=1)
    assert [a.q(n) for n in range(1, 6)] == [1, 3, 10, 43, 225]
    # [0; 1, 2, 3, ...] = I_1(2) / I_0(2)
    with mpmath.workdps(60):
        exact = mpmath.besseli(1, 2) / mpmath.besseli(0, 2)
        assert abs(a.to_mpf(50) - exact) < mpmath.mpf(10) ** -48
        for n in range(1, 6):
            assert abs(mpmath.mpf(a.p(n)) / a.q(n) - exact) < 1 / mpmath.mpf(a.q(n)) ** 2


def test_golden_value_and_distance():
    g = Frequency.golden()
    d = torus_dist(1, g)
    golden = (mpmath.sqrt(5) - 1) / 2
    assert abs(float(g) - float(golden)) < 1e-15
    assert abs(float(d.mid) - float(1 - golden)) < 1e-15
    assert d.width <= Fraction(1, 10**40)


def test_rational_stub_distance_is_zero():
    stub = RationalStub(Fraction(3, 7))
    assert torus_dist(7, stub) == torus_dist(0, stub)
    assert torus_dist(7, stub).hi == 0


def test_bounded_type_evidence():
    assert is_bounded_type(Frequency.golden(), 50).bounded
    assert is_bounded_type(Frequency.golden(), 50).max_quotient == 1
    grow = is_bounded_type(Frequency.from_rule("arithmetic"), 50)
    assert not grow.bounded and grow.max_quotient == 50
    silver = is_bounded_type(Frequency.silver(), 30)
    assert silver.bounded and silver.max_quotient == 2


def test_best_approximation_examples():
    g, s = Frequency.golden(), Frequency.silver()
    assert best_approx_verify(g, 6)
    assert best_approx_verify(s, 4)
    # 4 is not a golden denominator: ||4a|| > ||3a||
    assert not best_approx_holds(g, 4)


def test_sharp_two_sided_bound_holds():
    for alpha in (Frequency.golden(), Frequency.silver(), Frequency.from_rule("arithmetic")):
        for n in range(1, 25):
            assert sandwich_check(alpha, n).sharp


def test_quoted_lower_bound_is_violated_already_at_level_one():
    res = sandwich_check(Frequency.golden(), 1)
    # ||alpha|| = 0.382 < 1/q_2 = 1/2
    assert res.upper and not res.literal_lower


def test_lower_bound_golden():
    assert lower_bound_holds(Frequency.golden(), 3, 2000)
    assert not lower_bound_holds(Frequency.from_rule("geometric", base=10), 3, 2000)


def test_insufficient_depth_is_reported():
    de = Frequency.from_rule("doubly_exponential")
    with pytest.raises(InsufficientPrecision):
        de.q(de.precision_depth + 1)
    with pytest.raises(InsufficientPrecision):
        convergents(de, 100)
    with pytest.raises(InvalidInput):
        Frequency.from_rule("nonsense")


def test_config_round_trip():
    for f in (Frequency.golden(), Frequency.from_rule("periodic", period=[1, 2, 3]),
              Frequency.from_rule("explicit", quotients=[2, 1000])):
        assert Frequency.from_config(f.to_config()) == f


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=2, max_size=30))
def test_determinant_and_gcd(quotients):
    f = Frequency.from_rule("explicit", quotients=quotients)
    for n in range(0, len(quotients)):
        det = f.p(n + 1) * f.q(n) - f.p(n) * f.q(n + 1)
        assert det == (-1) ** n
    with mpmath.workdps(80):
        # the convergents approach the value of the finite prefix
        head = cf_value(quotients)
        n = len(quotients)
        assert abs(mpmath.mpf(f.p(n)) / f.q(n) - head) < mpmath.mpf(10) ** -60


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=4, max_size=12), st.integers(1, 2000))
def test_distance_enclosure_contains_true_value(quotients, k):
    f = Frequency.from_rule("explicit", quotients=quotients)
    d = torus_dist(k, f, Fraction(1, 10**30))
    with mpmath.workdps(60):
        x = k * f.to_mpf(50)
        true = min(x - mpmath.floor(x), mpmath.ceil(x) - x)
        assert mpmath.mpf(d.lo.numerator) / d.lo.denominator - true < mpmath.mpf(10) ** -40
        assert true - mpmath.mpf(d.hi.numerator) / d.hi.denominator < mpmath.mpf(10) ** -40


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=12, max_size=20))
def test_denominators_are_best_approximations(quotients):
    f = Frequency.from_rule("explicit", quotients=quotients)
    for n in range(1, 8):
        if f.q(n) > 3000:
            break
        assert best_approx_verify(f, n)
