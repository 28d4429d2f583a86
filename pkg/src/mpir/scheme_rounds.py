"""Multi-round retrieval for P <= M/2.

Round ``i`` holds sums of ``i`` symbols and is repeated for ``alpha_i`` stages,
each stage covering all ``C(M, i)`` message subsets. A subset with ``k`` desired
messages (its *category*) reuses an undesired sum of size ``i - k`` that another
database produced in round ``i - k``; that sum cancels out at decode time. One
desired symbol per equation is new, the other ``k - 1`` are symbols already
decodable from other databases (the *pool*).
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import DecodeMismatch, DomainError, LedgerUnderflow, PoolUnderflow
from .stage_planner import StagePlan, stage_counts
from .message_store import AnswerSet, ProblemParams, Query, QueryTable, RetrievalRequest, Term, stream

StageKey = tuple[int, int, int]  # (db, round, stage)


def rounds_params(M: int, P: int, N: int, q: int = 2, plan: StagePlan | None = None) -> ProblemParams:
    plan = plan or stage_counts(M, P, N)
    return ProblemParams(M, P, N, q, plan.L)


@dataclass
class SideInfoLedger:
    """Which producer stage each consumer subgroup drew its side information from."""

    produced: dict[StageKey, dict[tuple[int, ...], int]] = field(default_factory=dict)
    consumed: dict[tuple[int, int, int, int, tuple[int, ...]], StageKey] = field(default_factory=dict)

    def check(self, N: int) -> list[str]:
        """Return a list of violated invariants (empty when balanced)."""
        problems = []
        uses: Counter = Counter()
        for (db, rnd, stg, k, sub), (pdb, prnd, pstg) in self.consumed.items():
            if pdb == db:
                problems.append(f"db {db} consumes its own stage {(prnd, pstg)}")
            if prnd != rnd - k:
                problems.append(f"round {rnd} category {k} fed from round {prnd}")
            if (pdb, prnd, pstg) not in self.produced:
                problems.append(f"unknown producer {(pdb, prnd, pstg)}")
            uses[(pdb, prnd, pstg, db)] += 1
        for (pdb, prnd, pstg) in self.produced:
            for db in range(1, N + 1):
                if db == pdb:
                    continue
                n = uses[(pdb, prnd, pstg, db)]
                if n != 1:
                    problems.append(f"stage {(pdb, prnd, pstg)} used {n} times by db {db}")
        return problems


def rounds_build_queries(
    params: ProblemParams,
    request: RetrievalRequest,
    plan: StagePlan | None = None,
    shuffle: bool = True,
) -> QueryTable:
    """Query table for ``request``; only the upload order depends on the seed."""
    request.check(params)
    M, P, N = params.M, params.P, params.N
    if P == M and M > 1:
        raise DomainError("the multi-round scheme needs at least one undesired message")
    plan = plan or stage_counts(M, P, N)
    if (plan.M, plan.P, plan.N) != (M, P, N):
        raise ValueError("stage plan does not match the problem parameters")
    if params.L != plan.L:
        raise ValueError(f"message length must be {plan.L} for this plan")
    layout, ledger = _layout(params, request.desired, plan)
    dbs = [list(qs) for qs in layout]
    if shuffle:
        rng = stream(request.seed, "shuffle")
        dbs = [[qs[i] for i in rng.permutation(len(qs))] for qs in dbs]
    return QueryTable(params, "rounds", request.desired, dbs,
                      meta={"plan": plan, "ledger": ledger, "q": params.q})


@lru_cache(maxsize=128)
def _layout(params: ProblemParams, desired: tuple[int, ...], plan: StagePlan):
    """Per-database queries in construction order, plus the side-information ledger."""
    M, P, N = params.M, params.P, params.N
    dset = set(desired)

    next_index = {m: 1 for m in range(1, M + 1)}
    dbs: list[list[Query]] = [[] for _ in range(N)]
    ledger = SideInfoLedger()
    queues: dict[tuple[int, int], deque[StageKey]] = {}
    pools: dict[tuple[int, int], deque[int]] = {(n, m): deque() for n in range(1, N + 1) for m in desired}
    choice = _assign_fresh(plan, desired, N)

    def fresh(m: int) -> int:
        i = next_index[m]
        next_index[m] += 1
        return i

    for rnd in plan.rounds():
        new_desired: list[tuple[int, int, int]] = []  # (db, message, index)
        subsets = list(combinations(range(1, M + 1), rnd))
        for n in range(1, N + 1):
            queries = dbs[n - 1]
            for stg in range(1, plan.a(rnd) + 1):
                # one producer stage per (category, desired subgroup) that needs undesired terms
                sources: dict[tuple[int, ...], StageKey] = {}
                for k in range(1, P + 1):
                    if not 1 <= rnd - k <= M - P:
                        continue
                    for sub in combinations(desired, k):
                        queue = queues.get((n, rnd - k))
                        if not queue:
                            raise LedgerUnderflow(f"db {n} round {rnd} stage {stg} subgroup {sub}")
                        src = queue.popleft()
                        sources[sub] = src
                        ledger.consumed[(n, rnd, stg, k, sub)] = src
                produced: dict[tuple[int, ...], int] = {}
                for T in subsets:
                    sub = tuple(m for m in T if m in dset)
                    und = tuple(m for m in T if m not in dset)
                    seq = len(queries)
                    if not sub:
                        terms = tuple(Term(m, fresh(m), 1) for m in und)
                        produced[und] = seq
                        queries.append(Query(terms, rnd, stg, 0, seq))
                        continue
                    side = None
                    side_terms: tuple[Term, ...] = ()
                    if und:
                        pdb, prnd, pstg = sources[sub]
                        pseq = ledger.produced[(pdb, prnd, pstg)][und]
                        side = (pdb, pseq)
                        side_terms = dbs[pdb - 1][pseq].terms
                    f = choice.get((n, rnd, stg, T), sub[0])
                    fi = fresh(f)
                    if any(not pools[(n, m)] for m in sub if m != f):
                        raise PoolUnderflow(f"db {n} round {rnd}: no pooled symbol left for subgroup {sub}")
                    pooled = tuple((m, pools[(n, m)].popleft()) for m in sub if m != f)
                    new_desired.append((n, f, fi))
                    terms = [Term(f, fi, 1)] + [Term(m, i, 1) for m, i in pooled] + list(side_terms)
                    terms.sort(key=lambda t: t.message)
                    queries.append(Query(tuple(terms), rnd, stg, len(sub), seq,
                                         side=side, fresh=(f, fi), pooled=pooled))
                if rnd <= M - P:
                    ledger.produced[(n, rnd, stg)] = produced
        # side information and pooled symbols of this round become usable later
        if rnd <= M - P:
            for n in range(1, N + 1):
                others = [o for o in range(1, N + 1) if o != n]
                queues[(n, rnd)] = deque((o, rnd, s) for s in range(1, plan.a(rnd) + 1) for o in others)
        for n in range(1, N + 1):
            for src, m, i in new_desired:
                if src != n:
                    pools[(n, m)].append(i)

    for (n, j), left in queues.items():
        if left:
            raise LedgerUnderflow(f"db {n}: {len(left)} stages of round {j} never consumed")
    for m in desired:
        if next_index[m] - 1 != params.L:
            raise DecodeMismatch(f"message {m} got {next_index[m] - 1} fresh symbols, expected {params.L}")

    return tuple(tuple(qs) for qs in dbs), ledger


def _assign_fresh(plan: StagePlan, desired: tuple[int, ...], N: int) -> dict[tuple, int]:
    """Decide which member of each multi-message desired subgroup gets the new symbol.

    The equation layout does not depend on this choice, so it is made up
    front: a rotating greedy pass, then augmenting-path moves until every
    desired message receives the same number of new symbols.
    """
    M = plan.M
    slots: list[tuple[tuple, tuple[int, ...]]] = []
    for rnd in plan.rounds():
        for T in combinations(range(1, M + 1), rnd):
            sub = tuple(m for m in T if m in desired)
            if len(sub) < 2:
                continue
            for n in range(1, N + 1):
                for stg in range(1, plan.a(rnd) + 1):
                    slots.append(((n, rnd, stg, T), sub))
    load = Counter({m: 0 for m in desired})
    for m in desired:
        # single-member subgroups are forced and identical for every message
        load[m] += N * sum(plan.a(r) * comb(M - len(desired), r - 1) for r in plan.rounds())
    rotation: Counter = Counter()
    choice: dict[tuple, int] = {}
    for key, sub in slots:
        k = len(sub)
        start = (rotation[(key[0], sub)] + key[0] - 1) % k
        rotation[(key[0], sub)] += 1
        order = sub[start:] + sub[:start]
        f = min(order, key=lambda m: load[m])
        choice[key] = f
        load[f] += 1

    members = dict(slots)
    while max(load.values()) - min(load.values()) > 1 or (
        max(load.values()) != min(load.values()) and sum(load.values()) % len(desired) == 0
    ):
        hi = max(desired, key=lambda m: load[m])
        lo = min(desired, key=lambda m: load[m])
        path = _augmenting_path(hi, lo, choice, members)
        if path is None:
            break
        for key, new in path:
            load[choice[key]] -= 1
            choice[key] = new
            load[new] += 1
    return choice


def _augmenting_path(src: int, dst: int, choice: dict, members: dict):
    """Shortest chain of reassignments moving one unit of load from ``src`` to ``dst``."""
    by_owner: dict[int, list] = {}
    for key, owner in choice.items():
        by_owner.setdefault(owner, []).append(key)
    prev: dict[int, tuple | None] = {src: None}
    frontier = deque([src])
    while frontier:
        u = frontier.popleft()
        for key in by_owner.get(u, ()):
            for w in members[key]:
                if w in prev:
                    continue
                prev[w] = (key, u)
                if w == dst:
                    path = []
                    node = w
                    while prev[node] is not None:
                        key2, parent = prev[node]
                        path.append((key2, node))
                        node = parent
                    return path[::-1]
                frontier.append(w)
    return None


def rounds_decode(table: QueryTable, answers: AnswerSet, interleavers: np.ndarray | None = None) -> dict[int, np.ndarray]:
    """Cancel side information round by round and read off each fresh symbol."""
    p = table.params
    q = p.q
    pos = [table.by_seq(n) for n in range(1, table.N + 1)]

    def ans(db: int, seq: int) -> int:
        return int(answers[db - 1][pos[db - 1][seq]])

    work = sorted(
        ((qr.round, n, qr.seq, qr) for n, qs in enumerate(table.databases, 1) for qr in qs if qr.category),
        key=lambda x: x[:3],
    )
    known: dict[tuple[int, int], int] = {}
    for _, n, seq, qr in work:
        v = ans(n, seq)
        expect = Counter()
        if qr.side is not None:
            sdb, sseq = qr.side
            producer = table.databases[sdb - 1][pos[sdb - 1][sseq]]
            v -= ans(sdb, sseq)
            expect.update(producer.terms)
        for m, i in qr.pooled:
            if (m, i) not in known:
                raise DecodeMismatch(f"pooled symbol {m}:{i} used before it was decoded")
            v -= known[(m, i)]
            expect[Term(m, i, 1)] += 1
        fm, fi = qr.fresh
        expect[Term(fm, fi, 1)] += 1
        if expect != Counter(qr.terms):
            raise DecodeMismatch(f"db {n} query {seq} does not match its bookkeeping")
        known[(fm, fi)] = v % q

    out = {}
    for m in table.desired:
        try:
            x = np.array([known[(m, i)] for i in range(1, p.L + 1)], dtype=np.int64)
        except KeyError as exc:
            raise DecodeMismatch(f"symbol {exc.args[0]} was never retrieved") from None
        if interleavers is not None:
            w = np.empty_like(x)
            w[interleavers[m - 1]] = x
            x = w
        out[m] = x
    return out
