from collections import Counter
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpir.errors import FieldTooSmall
from mpir.gf_core import solve_linear
from mpir.message_store import ProblemParams, RetrievalRequest, answer, generate_store, zero_store
from mpir.scheme_mds import (
    fresh_index,
    mds_build_queries,
    mds_decode,
    mds_params,
    mds_plan,
    mds_rate,
    privacy_matrix,
)
from mpir.tables import format_equation
from mpir.verifier import oracle_decode


def equations(table, db):
    return [format_equation(qr, table.params.M) for qr in table.construction_order(db)]


def test_two_by_three_table():
    p = mds_params(3, 2, 2, q=5)
    t = mds_build_queries(p, RetrievalRequest((1, 2)), perms=[(2, 1, 3)], shuffle=False)
    assert equations(t, 1) == ["a_1", "b_1", "c_1", "a_3 + b_3 + c_2", "2a_3 + b_3 + 3c_2"]
    assert equations(t, 2) == ["a_2", "b_2", "c_2", "a_4 + b_4 + c_1", "2a_4 + b_4 + 3c_1"]


def test_five_three_two_table_over_f5():
    # the column of 5s reduces to 0 mod 5, so those terms vanish
    p = mds_params(5, 3, 2, q=5)
    t = mds_build_queries(p, RetrievalRequest((1, 2, 3)), perms=[(2, 5, 1, 3, 4)], shuffle=False)
    assert equations(t, 1)[5:] == ["a_3 + b_3 + c_3 + d_2 + e_2", "2a_3 + c_3 + 3d_2 + 4e_2", "4a_3 + c_3 + 4d_2 + e_2"]
    assert equations(t, 2)[5:] == ["a_4 + b_4 + c_4 + d_1 + e_1", "2a_4 + c_4 + 3d_1 + 4e_1", "4a_4 + c_4 + 4d_1 + e_1"]


def test_four_two_three_table():
    p = mds_params(4, 2, 3, q=5)
    t = mds_build_queries(p, RetrievalRequest((1, 2)), perms=[(1, 3, 2, 4), (4, 1, 3, 2)], shuffle=False)
    assert equations(t, 1)[4:] == ["a_4 + b_4 + c_2 + d_2", "a_4 + 3b_4 + 2c_2 + 4d_2",
                                   "a_5 + b_5 + c_3 + d_3", "4a_5 + b_5 + 3c_3 + 2d_3"]
    assert equations(t, 2)[4:] == ["a_6 + b_6 + c_1 + d_1", "a_6 + 3b_6 + 2c_1 + 4d_1",
                                   "a_7 + b_7 + c_3 + d_3", "4a_7 + b_7 + 3c_3 + 2d_3"]
    assert equations(t, 3)[4:] == ["a_8 + b_8 + c_1 + d_1", "a_8 + 3b_8 + 2c_1 + 4d_1",
                                   "a_9 + b_9 + c_2 + d_2", "4a_9 + b_9 + 3c_2 + 2d_2"]
    assert t.counts() == [8, 8, 8]


def test_fresh_index_layout():
    assert [fresh_index(3, n, j) for n in (1, 2, 3) for j in (1, 2)] == [4, 5, 6, 7, 8, 9]


def test_field_too_small():
    with pytest.raises(FieldTooSmall):
        mds_build_queries(ProblemParams(5, 3, 2, 3, 4), RetrievalRequest((1, 2, 3)))


def test_rejects_wrong_length():
    with pytest.raises(ValueError):
        mds_build_queries(ProblemParams(3, 2, 2, 5, 5), RetrievalRequest((1, 2)))


@pytest.mark.parametrize("M", range(1, 9))
def test_counts_and_rate_for_every_desired_set(M):
    for N in range(2, 5):
        for P in range(1, M + 1):
            p = mds_params(M, P, N)
            for d in combinations(range(1, M + 1), P):
                t = mds_build_queries(p, RetrievalRequest(d, seed=M + N))
                assert t.counts() == [M + P * (N - 1)] * N
                assert Fraction(P * p.L, t.total) == mds_rate(M, P, N)
                used = Counter()
                for qs in t.databases:
                    for qr in qs:
                        for term in qr.terms:
                            used[(term.message, term.index)] += 1
                for m in range(1, M + 1):
                    distinct = {i for (mm, i) in used if mm == m}
                    assert len(distinct) == (N * N if m in d else N)


@pytest.mark.parametrize("M,P,N", [(3, 2, 2), (5, 3, 2), (4, 2, 3), (2, 1, 2), (4, 4, 3), (6, 3, 4), (7, 2, 3)])
def test_decode_recovers_every_desired_set(M, P, N):
    p = mds_params(M, P, N)
    for d in combinations(range(1, M + 1), P):
        req = RetrievalRequest(d, seed=len(d) + M)
        t = mds_build_queries(p, req)
        s = generate_store(p, 7)
        got = mds_decode(t, answer(t, s), s.interleavers)
        for m in d:
            assert np.array_equal(got[m], s.messages[m - 1])


def test_small_examples_download_counts():
    for (M, P, N), (desired, total) in {(3, 2, 2): (8, 10), (5, 3, 2): (12, 16), (2, 1, 2): (4, 6)}.items():
        p = mds_params(M, P, N)
        t = mds_build_queries(p, RetrievalRequest(tuple(range(1, P + 1))))
        assert (P * p.L, t.total) == (desired, total)
    assert mds_params(2, 1, 2).L == 4 and mds_rate(2, 1, 2) == Fraction(2, 3)


def test_rate_examples():
    assert mds_rate(3, 2, 2) == Fraction(4, 5)
    assert mds_rate(4, 2, 3) == Fraction(3, 4)
    assert all(mds_rate(M, M, N) == 1 for M in range(1, 6) for N in range(2, 5))


def test_zero_store_decodes_to_zero():
    p = mds_params(4, 2, 3)
    t = mds_build_queries(p, RetrievalRequest((2, 4)))
    got = mds_decode(t, answer(t, zero_store(p)))
    assert all(not v.any() for v in got.values())


def test_fresh_symbols_never_repeat():
    p = mds_params(5, 3, 3)
    t = mds_build_queries(p, RetrievalRequest((1, 4, 5)), shuffle=False)
    fresh = Counter()
    for n, qs in enumerate(t.databases, 1):
        for qr in qs:
            if qr.round == 2:
                fresh.update({(tm.message, tm.index) for tm in qr.terms if tm.message in (1, 4, 5)})
    assert max(fresh.values()) == p.P  # each fresh symbol sits in exactly the P rows of one group
    assert len(fresh) == 3 * p.N * (p.N - 1)


def test_privacy_matrix_blocks_are_invertible():
    p = mds_params(4, 2, 3)
    plan = mds_plan(p, seed=5)
    for d in combinations(range(1, 5), 2):
        H = privacy_matrix(plan, d)
        assert H.rows == H.cols == 2 * 3
        assert H.rank() == 6
        assert H.select_columns([0, 1]).to_rows()[:2] == [[1, 0], [0, 1]]
        blk = [[H[2 + r, 2 + c] for c in range(2)] for r in range(2)]
        assert blk == plan.coded(1).select_columns([m - 1 for m in d]).to_rows()
        assert solve_linear(plan.coded(2).select_columns([m - 1 for m in d]), [0, 0]).unique


def test_permutations_drawn_from_seed():
    p = mds_params(5, 3, 3)
    a, b = mds_plan(p, 3), mds_plan(p, 3)
    assert a.perms == b.perms and len(a.perms) == 2
    assert all(sorted(x) == [1, 2, 3, 4, 5] for x in a.perms)
    with pytest.raises(ValueError):
        mds_plan(p, 3, perms=[(1, 2, 3, 4, 5)])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(2, 4), st.integers(0, 10**6), st.data())
def test_decoder_agrees_with_oracle(M, N, seed, data):
    P = data.draw(st.integers((M + 1) // 2, M))
    d = tuple(sorted(data.draw(st.lists(st.integers(1, M), min_size=P, max_size=P, unique=True))))
    p = mds_params(M, P, N)
    req = RetrievalRequest(d, seed)
    t = mds_build_queries(p, req)
    s = generate_store(p, seed)
    ans = answer(t, s)
    ours = mds_decode(t, ans)
    ref = oracle_decode(t, ans, req, p).messages
    assert all(np.array_equal(ours[m], ref[m]) for m in d)
