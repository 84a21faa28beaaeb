import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_counts, naive_window_count, naive_z, pmf
from pgeneric.digits import DigitBuffer, stream_constant, stream_debruijn, stream_random
from pgeneric.errors import PreconditionError
from pgeneric.stats import (
    PoissonRef,
    ZProfile,
    as_lambda,
    count_distribution,
    discrepancy,
    distinct_fraction,
    f_large_holds,
    normality_deviation,
    poisson_pmf,
    tv_distance,
    tv_poisson,
    weakly_poisson_scan,
    window_count,
    z_deviation,
    z_profile,
)


def zeros(n, base=2):
    return stream_constant(base, 0).buffer(n)


def test_lambda_coercion():
    assert as_lambda("3/4") == Fraction(3, 4)
    assert as_lambda(0.1) == Fraction(1, 10)
    assert as_lambda(2) == 2
    with pytest.raises(PreconditionError):
        as_lambda(0)


@pytest.mark.parametrize("lam", [Fraction(1), Fraction(1, 3), Fraction(5, 2), Fraction(7, 10)])
@pytest.mark.parametrize("k", [1, 3, 6])
def test_window_count_conventions(lam, k):
    assert window_count(3, k, lam, "A") == naive_window_count(3, k, lam, "A")
    assert window_count(3, k, lam, "B") == naive_window_count(3, k, lam, "B")


def test_constant_zero_profile():
    p = z_profile(zeros(6), 2, 1, j_max=8)
    assert p.window_count == 5
    assert p[0] == Fraction(3, 4) and p[5] == Fraction(1, 4)
    assert all(p[j] == 0 for j in range(1, 9) if j != 5)
    sup, _ = z_deviation(p)
    assert sup >= 0.382


def test_buffer_too_short():
    with pytest.raises(PreconditionError):
        z_profile(zeros(5), 2, 1)  # convention A needs 6 digits
    z_profile(zeros(5), 2, 1, convention="B")


@pytest.mark.parametrize("base,k,lam", [(2, 3, Fraction(1)), (3, 2, Fraction(5, 3)), (2, 5, Fraction(1, 2)), (4, 2, Fraction(3))])
@pytest.mark.parametrize("convention", ["A", "B"])
def test_profile_matches_oracle(base, k, lam, convention):
    buf = stream_random(base, 9).buffer(5000)
    p = z_profile(buf, k, lam, j_max=40, convention=convention)
    expected = naive_z(buf.digits, base, k, naive_window_count(base, k, lam, convention))
    assert {j: z for j, z in enumerate(p.z) if z} == expected
    assert sum(p.z) + p.z_above == 1


def test_overflow_bucket():
    p = z_profile(zeros(40), 1, 10, j_max=4)  # 21 windows of word 0
    assert p.above == 1 and p.z_above == Fraction(1, 2) and p[0] == Fraction(1, 2)


@pytest.mark.parametrize("base,k", [(2, 5), (3, 4), (2, 8)])
def test_debruijn_extremal(base, k):
    buf = stream_debruijn(base, k).buffer(base**k + k)
    assert z_profile(buf, k, 1, convention="B")[1] == 1
    assert z_profile(buf, k, 1, convention="A")[1] >= 1 - Fraction(2, base**k)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), k=st.integers(1, 7), lam=st.fractions(Fraction(1, 8), 4))
def test_convention_bridge(seed, k, lam):
    buf = stream_random(2, seed).buffer(int(lam * 2**k) + k + 1)
    a = z_profile(buf, k, lam, j_max=200, convention="A")
    b = z_profile(buf, k, lam, j_max=200, convention="B")
    l1 = sum(abs(x - y) for x, y in zip(a.z, b.z)) + abs(a.z_above - b.z_above)
    assert l1 <= Fraction(4, 2**k)


def test_poisson_pmf():
    assert poisson_pmf(1, 0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert poisson_pmf(1, 1) == pytest.approx(math.exp(-1), rel=1e-15)
    assert 1 - 1e-12 <= sum(poisson_pmf(5, j) for j in range(201)) <= 1 + 1e-15
    for lam, j in [(0.5, 3), (7.25, 12), (30, 40)]:
        assert poisson_pmf(lam, j) == pytest.approx(pmf(lam, j), rel=1e-12)
    assert 0 <= poisson_pmf(3, 500) < 1e-300  # no overflow from 500!


def test_poisson_ref():
    ref = PoissonRef.build(Fraction(2), 64)
    assert ref.pmf.sum() <= 1 and ref.pmf.min() >= 0


def test_deviation_of_exact_profile_is_zero():
    # synthetic profile equal to the reference in every bucket that matters
    ref = PoissonRef.build(1, 3)
    prof = ZProfile(2, 1, Fraction(1), "A", 3, np.array([1, 1, 0, 0]), 0)
    sup, l1 = z_deviation(prof, ref)
    assert sup == pytest.approx(max(abs(0.5 - ref.pmf[0]), abs(0.5 - ref.pmf[1]), ref.pmf[2]))
    same = ZProfile(2, 1, Fraction(1), "A", 3, np.array([1, 1]), 0)
    fake = PoissonRef(Fraction(1), np.array([0.5, 0.5]))
    assert z_deviation(same, fake) == (0.0, 0.0)


def test_deviation_lambda_mismatch():
    p = z_profile(zeros(6), 2, 1)
    with pytest.raises(PreconditionError):
        z_deviation(p, PoissonRef.build(2))


def test_distinct_fraction():
    buf = stream_random(2, 3).buffer(3000)
    got = distinct_fraction(buf, 6, 3000)
    assert got == Fraction(len(naive_counts(buf.digits, 6)), 64)


# --- normality and discrepancy ----------------------------------------------

def test_normality_constant():
    rep = normality_deviation(zeros(100), 100, 1)
    assert rep.per_length[0] == Fraction(1, 2)


def test_normality_matches_oracle():
    buf = stream_random(3, 2).buffer(2000)
    rep = normality_deviation(buf, 1500, 3)
    for ell in (1, 2, 3):
        c = naive_counts(buf.digits[:1500], ell)
        words = [tuple(w) for w in np.ndindex(*([3] * ell))]
        worst = max(abs(Fraction(c.get(w, 0), 1500) - Fraction(1, 3**ell)) for w in words)
        assert rep.per_length[ell - 1] == worst


def test_normality_debruijn_and_random():
    assert normality_deviation(stream_debruijn(2, 10).buffer(1024), 1024, 3).sup < 0.02
    assert normality_deviation(stream_random(2, 42).buffer(10**6), 10**6, 4).sup < 0.01


def test_discrepancy_examples():
    assert discrepancy(zeros(8), (0,), 8).value == 4
    buf = zeros(20)
    assert discrepancy(buf, (1, 1), 20).value == Fraction(20, 4)
    assert f_large_holds(zeros(50), lambda w, n: 0.1, (1,), range(1, 51))


def test_discrepancy_bounds():
    with pytest.raises(PreconditionError):
        discrepancy(zeros(3), (0, 0, 0, 0), 3)


# --- weakly Poisson scan -----------------------------------------------------------

def test_weakly_scan_random():
    buf = stream_random(2, 42).buffer(2**14 + 15)
    assert weakly_poisson_scan(buf, 1, 0, 0.05, range(8, 15)) == list(range(8, 15))


def test_weakly_scan_constant():
    assert weakly_poisson_scan(zeros(2**8 + 9), 1, 0, 0.05, range(2, 9)) == []
    assert weakly_poisson_scan(zeros(2**8 + 9), 1, 0, 2, range(2, 9)) == list(range(2, 9))


# --- count distributions and total variation ----------------------------------------

@pytest.mark.parametrize("lam", [Fraction(1), Fraction(1, 2), Fraction(9, 4)])
def test_count_distribution_equals_convention_b(lam):
    buf = stream_random(2, 5).buffer(3000)
    dist = count_distribution(buf, 8, 0, lam)
    prof = z_profile(buf, 8, lam, j_max=60, convention="B")
    assert dist == {j: z for j, z in enumerate(prof.z) if z}


def test_count_distribution_empty_interval():
    assert count_distribution(stream_random(2, 5).buffer(100), 4, Fraction(1, 2), Fraction(1, 2)) == {0: 1}


def test_count_distribution_window_range():
    buf = stream_random(3, 1).buffer(500)
    dist = count_distribution(buf, 3, Fraction(1, 3), Fraction(5, 4))
    # starts p with 9 < p <= 33.75
    c = naive_counts(buf.digits, 3, 10, 24)
    hist = {}
    for v in c.values():
        hist[v] = hist.get(v, 0) + 1
    hist[0] = 27 - len(c)
    assert dist == {j: Fraction(n, 27) for j, n in hist.items() if n}


def test_count_distribution_interval_near_poisson():
    buf = stream_random(2, 42).buffer(2**12 + 12)
    dist = count_distribution(buf, 12, Fraction(1, 2), Fraction(3, 4))
    assert tv_distance(dist, {j: pmf(0.25, j) for j in range(30)}) < 0.05


def test_tv_distance_basics():
    assert tv_distance({0: 0.3, 1: 0.7}, [0.3, 0.7]) == 0
    assert tv_distance({0: 1.0}, {1: 1.0}) == 1
    assert tv_distance([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.25)


def test_tv_poisson():
    assert tv_poisson(1, 1) == 0
    v = tv_poisson(1, 1.25)
    assert 0 < v <= 0.25
    direct = 0.5 * sum(abs(pmf(1, j) - pmf(1.25, j)) for j in range(60))
    assert v == pytest.approx(direct, abs=1e-12)
