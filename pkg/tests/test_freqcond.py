import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasilab.contfrac import Frequency, torus_dist
from quasilab.errors import FormulaRegimeViolated
from quasilab.freqcond import (FrequencyVector, aeps_closed_form, aeps_measure, aeps_series,
                               condition_score, d2_interleave, generic_seq_search,
                               interleave_ratio)
from quasilab.montecarlo import MCParams

GOLDEN = Frequency.golden()
DOUBLE_EXP = Frequency.from_rule("doubly_exponential")


def brute_score(alpha, tau):
    prod = math.prod(tau)
    return max(Fraction(prod, t) * torus_dist(t, a, Fraction(1, 10**60)).mid
               for a, t in zip(alpha, tau))


def test_one_dimensional_target_half():
    res = generic_seq_search(FrequencyVector.of(GOLDEN), 0.5)
    assert res.found and res.tau == (1,)


def test_liouville_pair_found_with_deep_golden_search():
    alpha = FrequencyVector.of(GOLDEN, DOUBLE_EXP)
    res = generic_seq_search(alpha, 1e-3, budget=60)
    assert res.found
    assert res.tau[1] in DOUBLE_EXP.denominators()
    # the second period sits just before a huge partial quotient
    level = DOUBLE_EXP.denominators().index(res.tau[1])
    assert DOUBLE_EXP.a(level + 1) >= 2**16
    assert float(brute_score(alpha, res.tau)) < 1e-3
    assert res.score.contains(brute_score(alpha, res.tau))


def test_liouville_pair_not_reachable_at_shallow_depth():
    # the shortest witness needs golden denominators near 6e11
    alpha = FrequencyVector.of(GOLDEN, DOUBLE_EXP)
    assert not generic_seq_search(alpha, 1e-3, budget=25).found


def test_bounded_pair_exhausts():
    res = generic_seq_search(FrequencyVector.of(GOLDEN, GOLDEN), 1e-3, budget=25)
    assert not res.found
    # both components of bounded type: the score stays bounded below
    assert res.best.score.lo > Fraction(1, 10)


def test_lexicographic_witness_is_minimal():
    alpha = FrequencyVector.of(GOLDEN, DOUBLE_EXP)
    res = generic_seq_search(alpha, Fraction(1, 2), budget=10)
    g = [GOLDEN.q(n) for n in range(1, 11)]
    d = sorted({DOUBLE_EXP.q(n) for n in range(1, 11)})
    first = next((t1, t2) for t1 in g for t2 in d if brute_score(alpha, (t1, t2)) < Fraction(1, 2))
    assert res.tau == first


def test_interleave_examples():
    found = d2_interleave(GOLDEN, DOUBLE_EXP, 0.01, depth=40)
    assert found.found and found.ratio < Fraction(1, 100)
    assert interleave_ratio(GOLDEN, DOUBLE_EXP, found.n, found.m) == found.ratio
    assert not d2_interleave(GOLDEN, DOUBLE_EXP, 0.01, depth=25).found

    none = d2_interleave(GOLDEN, GOLDEN, 0.1, depth=30)
    assert not none.found and none.best_ratio >= Fraction(1, 3)

    same = d2_interleave(GOLDEN, GOLDEN, 2)
    assert same.found and (same.n, same.m) == (1, 1)


def test_measure_closed_forms():
    assert aeps_closed_form([2, 2, 2], 0.1) == Fraction(1, 8000)
    assert aeps_closed_form([1, 1], 0.25) == Fraction(1, 4)
    assert aeps_closed_form([3, 5], Fraction(1, 10**9)) < Fraction(1, 10**17)
    with pytest.raises(FormulaRegimeViolated):
        aeps_closed_form([1, 1], 0.75)


def test_measure_monte_carlo_small_case():
    res = aeps_measure([1, 1], 0.25, MCParams(samples=200_000, seed=3))
    assert res.estimate.contains(0.25)


def test_series_values():
    assert aeps_series(0.5, 4, 1).partial == 1.0
    s3 = aeps_series(0.1, 3, 10**6)
    limit = 0.008 * (math.pi**2 / 6) ** 3
    assert s3.partial <= limit <= s3.upper_bound
    sums = [aeps_series(0.1, 2, n) for n in (10**2, 10**4, 10**6)]
    assert all(s.divergent for s in sums)
    growth = [s.partial / (0.2**2 * math.log(n) ** 2) for s, n in zip(sums, (10**2, 10**4, 10**6))]
    assert growth[0] > growth[1] > growth[2] > 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=3),
       st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(1, 2)))
def test_closed_form_monotone_in_epsilon(m, eps):
    half = eps / 2
    assert aeps_closed_form(m, half) <= aeps_closed_form(m, eps)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30))
def test_score_matches_brute_force(n1, n2):
    alpha = FrequencyVector.of(GOLDEN, Frequency.silver())
    tau = (GOLDEN.q(n1), Frequency.silver().q(n2))
    assert condition_score(alpha, tau).contains(brute_score(alpha, tau))


def test_threads_do_not_change_counts():
    a = aeps_measure([2, 3], 0.2, MCParams(samples=300_000, seed=5, chunk_size=10_000))
    b = aeps_measure([2, 3], 0.2, MCParams(samples=300_000, seed=5, chunk_size=10_000, threads=4))
    assert a.estimate == b.estimate
