import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from mpir.errors import IndexOutOfRange
from mpir.message_store import (
    ProblemParams,
    Query,
    QueryTable,
    RetrievalRequest,
    Term,
    all_requests,
    answer,
    answer_one,
    dump_store,
    generate_store,
    load_store,
    stream,
    streams,
    zero_store,
)

PARAMS = ProblemParams(M=3, P=2, N=2, q=5, L=4)


def test_params_validation():
    with pytest.raises(ValueError):
        ProblemParams(3, 4, 2, 5, 4)
    with pytest.raises(ValueError):
        ProblemParams(3, 2, 1, 5, 4)
    with pytest.raises(ValueError):
        ProblemParams(3, 2, 2, 6, 4)


def test_request_validation():
    r = RetrievalRequest((2, 1))
    assert r.desired == (1, 2) and r.undesired(3) == (3,)
    with pytest.raises(ValueError):
        RetrievalRequest((1, 1))
    with pytest.raises(ValueError):
        RetrievalRequest((1, 4)).check(PARAMS)
    with pytest.raises(ValueError):
        RetrievalRequest((1,)).check(PARAMS)
    assert [r.desired for r in all_requests(3, 2)] == [(1, 2), (1, 3), (2, 3)]


def test_store_is_deterministic_and_in_range():
    a, b = generate_store(PARAMS, 11), generate_store(PARAMS, 11)
    assert np.array_equal(a.messages, b.messages) and np.array_equal(a.interleavers, b.interleavers)
    assert a.messages.shape == (3, 4) and a.messages.size == 12
    assert a.messages.min() >= 0 and a.messages.max() < 5
    assert not np.array_equal(a.messages, generate_store(PARAMS, 12).messages)


def test_store_is_immutable():
    s = generate_store(PARAMS, 0)
    with pytest.raises(ValueError):
        s.messages[0, 0] = 1


def test_symbols_are_uniform():
    counts = np.zeros(PARAMS.q, dtype=int)
    for seed in range(10_000):
        counts += np.bincount(generate_store(PARAMS, seed).messages.ravel(), minlength=PARAMS.q)
    assert chisquare(counts).pvalue > 0.01


def test_interleavers_are_bijections_and_round_trip():
    p = ProblemParams(4, 2, 3, 5, 9)
    s = generate_store(p, 3)
    X = s.interleaved
    for m in range(1, p.M + 1):
        assert sorted(s.interleavers[m - 1]) == list(range(p.L))
        for i in range(p.L):
            assert X[m - 1, i] == s.messages[m - 1, s.interleavers[m - 1, i]]
        assert np.array_equal(s.deinterleave(m, X[m - 1]), s.messages[m - 1])


def test_streams_are_independent_of_desired_set():
    # randomness depends only on the seed, never on which messages are wanted
    a, b = streams(4), streams(4)
    for name in a:
        assert np.array_equal(a[name].permutation(10), b[name].permutation(10))
    assert not np.array_equal(stream(4, "perms").permutation(10), stream(4, "shuffle").permutation(10))


def test_empty_table_gives_empty_answers():
    table = QueryTable(PARAMS, "none", (1, 2), [[], []])
    ans = answer(table, generate_store(PARAMS, 0))
    assert [len(a) for a in ans] == [0, 0]


def test_identity_query():
    s = generate_store(PARAMS, 5)
    (v,) = answer_one([Query((Term(1, 1, 1),))], s.interleaved, 5)
    assert v == s.interleaved[0, 0]


def test_out_of_range_term():
    s = generate_store(PARAMS, 5)
    with pytest.raises(IndexOutOfRange):
        answer_one([Query((Term(1, 5, 1),))], s.interleaved, 5)
    with pytest.raises(IndexOutOfRange):
        answer_one([Query((Term(4, 1, 1),))], s.interleaved, 5)
    with pytest.raises(IndexOutOfRange):
        s.replica(3)


def test_zero_coefficients_rejected():
    with pytest.raises(ValueError):
        Query((Term(1, 1, 0),))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.data())
def test_answers_are_linear(seed, alpha, data):
    s = generate_store(PARAMS, seed)
    X, q = s.interleaved, PARAMS.q

    def draw_query():
        n = data.draw(st.integers(1, 3))
        return [Term(data.draw(st.integers(1, 3)), data.draw(st.integers(1, 4)), data.draw(st.integers(1, 4)))
                for _ in range(n)]

    q1, q2 = draw_query(), draw_query()
    combined = [Term(t.message, t.index, t.coeff * alpha % q) for t in q1] + q2
    a1, a2, a12 = answer_one([Query(tuple(q1)), Query(tuple(q2)), Query(tuple(combined))], X, q)
    assert a12 == (alpha * a1 + a2) % q


def test_replicas_answer_identically():
    s = generate_store(PARAMS, 9)
    qs = [Query((Term(1, 2, 3), Term(3, 4, 1))), Query((Term(2, 1, 2),))]
    table = QueryTable(PARAMS, "same", (1, 2), [qs, qs])
    a, b = answer(table, s)
    assert np.array_equal(a, b)


def test_store_text_round_trip():
    s = generate_store(PARAMS, 21)
    text = dump_store(s)
    assert text.splitlines()[0] == "3 2 2 5 4 21"
    back = load_store(text)
    assert np.array_equal(back.messages, s.messages) and np.array_equal(back.interleavers, s.interleavers)
    assert dump_store(back) == text


def test_store_rejects_out_of_field_symbols():
    with pytest.raises(ValueError):
        load_store("1 1 2 2 2 0\n0 3\n")


def test_zero_store():
    assert not zero_store(PARAMS).messages.any()
