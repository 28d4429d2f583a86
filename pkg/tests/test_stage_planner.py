from fractions import Fraction
from math import comb, gcd

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpir.stage_planner import (
    StagePlan,
    rational_rate,
    spectral_plan,
    spectral_rate,
    spectral_totals,
    stage_counts,
    stage_recurrence,
)


@pytest.mark.parametrize("MPN,alpha", [
    ((5, 2, 2), (5, 2, 1, 0, 1)),
    ((4, 2, 2), (2, 1, 0, 1)),
    ((5, 2, 3), (6, 4, 4, 0, 8)),
    ((7, 3, 3), (67, 30, 12, 8, 0, 0, 16)),
])
def test_known_stage_counts(MPN, alpha):
    assert stage_counts(*MPN).alpha == alpha


@pytest.mark.parametrize("M,N", [(M, N) for M in range(1, 9) for N in range(2, 6)])
def test_single_message_counts(M, N):
    assert stage_counts(M, 1, N).alpha == tuple((N - 1) ** (k - 1) for k in range(1, M + 1))


def test_totals():
    p = stage_counts(5, 2, 2)
    assert (p.D_db, p.U_db, p.L) == (56, 22, 34)
    assert stage_counts(7, 3, 3).D_db == 1815
    assert 3 * stage_counts(5, 2, 3).D_db == 354 and stage_counts(5, 2, 3).D_db == 118


def test_rational_rates():
    assert rational_rate(stage_counts(5, 2, 3)) == Fraction(42, 59)
    assert rational_rate(stage_counts(7, 3, 3)) == Fraction(437, 605)
    assert rational_rate(stage_counts(2, 1, 2)) == Fraction(2, 3)
    assert rational_rate(stage_counts(4, 2, 2)) == Fraction(2, 3)


def test_spectral_examples():
    assert spectral_rate(5, 2, 2) == pytest.approx(17 / 28, abs=1e-12)
    assert spectral_rate(4, 2, 2) == pytest.approx(2 / 3, abs=1e-12)
    assert spectral_rate(6, 3, 2) == pytest.approx((1 - 1 / 2) / (1 - 1 / 4), abs=1e-12)


grid = st.tuples(st.integers(2, 12), st.integers(2, 10)).flatmap(
    lambda mn: st.tuples(st.just(mn[0]), st.integers(1, mn[0] // 2), st.just(mn[1])))


@given(grid)
def test_plan_invariants(mpn):
    M, P, N = mpn
    raw = stage_recurrence(M, P, N)
    assert all(v.denominator == 1 and v >= 0 for v in raw)
    plan = stage_counts(M, P, N)
    assert plan.a(M) == plan.scale * (N - 1) ** (M - P)
    assert all(plan.a(k) == 0 for k in range(M - P + 1, M))
    assert plan.D_db == sum(plan.a(k) * comb(M, k) for k in range(1, M + 1))
    assert plan.U_db == sum(plan.a(k) * comb(M - P, k) for k in range(1, M + 1))
    assert plan.L * P == N * (plan.D_db - plan.U_db)


@given(grid)
def test_supply_matches_demand(mpn):
    # every stage a database produces in round j is consumed once by each other database
    M, P, N = mpn
    plan = stage_counts(M, P, N)
    for j in range(1, M - P + 1):
        assert plan.demand(j) == (N - 1) * plan.a(j)
        assert sum(comb(P, k) * plan.a(j + k) for k in range(1, P + 1)) == (N - 1) * plan.a(j)


@given(grid)
def test_scaling_is_minimal_and_rate_preserving(mpn):
    M, P, N = mpn
    raw = StagePlan(M, P, N, tuple(int(v) for v in stage_recurrence(M, P, N)))
    plan = stage_counts(M, P, N)
    assert plan.scale == P // gcd(P, N * (raw.D_db - raw.U_db))
    assert rational_rate(plan) == rational_rate(raw)
    assert stage_counts(M, P, N, balanced=False) == raw


def test_scaling_kicks_in_when_length_would_be_fractional():
    raw = stage_counts(6, 3, 2, balanced=False)
    assert (2 * (raw.D_db - raw.U_db)) % 3 != 0
    assert stage_counts(6, 3, 2).scale == 3


@given(grid)
def test_spectral_roots_and_weights(mpn):
    M, P, N = mpn
    sp = spectral_plan(M, P, N)
    for r in sp.roots:
        assert abs(N * r ** P - (r + 1) ** P) < 1e-12 * max(1.0, abs(r) ** P)
    raw = stage_recurrence(M, P, N)
    # rounding error tracks the largest stage count, not each entry
    big = float(max(raw))
    for k in range(1, M + 1):
        val = sp.alpha(k)
        assert abs(val.imag) < 1e-12 * big
        assert abs(val.real - float(raw[k - 1])) < 1e-12 * big


@given(grid)
def test_spectral_totals_match_plan(mpn):
    M, P, N = mpn
    raw = stage_counts(M, P, N, balanced=False)
    D, U = spectral_totals(spectral_plan(M, P, N))
    assert D.real == pytest.approx(raw.D_db, rel=1e-9)
    assert U.real == pytest.approx(raw.U_db, rel=1e-9, abs=1e-6)


def test_spectral_equals_rational_on_full_grid():
    worst = max(
        abs(spectral_rate(M, P, N) - float(rational_rate(stage_counts(M, P, N))))
        for M in range(2, 13) for P in range(1, M // 2 + 1) for N in range(2, 11)
    )
    assert worst < 1e-9


def test_single_root_for_one_desired_message():
    sp = spectral_plan(4, 1, 3)
    assert len(sp.roots) == 1 and sp.roots[0] == pytest.approx(1 / 2)


def test_bad_arguments():
    with pytest.raises(ValueError):
        stage_counts(3, 4, 2)
    with pytest.raises(ValueError):
        stage_counts(3, 1, 1)
