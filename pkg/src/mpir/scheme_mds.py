"""Two-round MDS-coded retrieval, capacity achieving when 2P >= M.

Round one fetches one symbol of every message from every database. In round
two, database ``n`` receives, for each other database ``n'``, the ``P`` rows of
``G S_j`` applied to ``P`` fresh desired symbols and the ``M - P`` undesired
symbols already fetched from ``n'``. Message ``m`` always takes column
``perm_j[m]`` of the Reed-Solomon generator ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DecodeMismatch
from .gf_core import FieldMatrix, next_prime, rs_generator, solve_linear
from .message_store import AnswerSet, ProblemParams, Query, QueryTable, RetrievalRequest, Term, stream


def mds_params(M: int, P: int, N: int, q: int | None = None) -> ProblemParams:
    return ProblemParams(M, P, N, next_prime(M) if q is None else q, N * N)


@dataclass(frozen=True)
class MdsPlan:
    generator: FieldMatrix
    perms: tuple[tuple[int, ...], ...]  # 1-based column choice per message, one per side-info group

    def coded(self, j: int) -> FieldMatrix:
        """``G S_j`` with columns ordered by message (column m is column perm_j[m] of G)."""
        return self.generator.select_columns([c - 1 for c in self.perms[j - 1]])


def mds_plan(params: ProblemParams, seed: int, perms: Sequence[Sequence[int]] | None = None) -> MdsPlan:
    G = rs_generator(params.P, params.M, params.q)
    if perms is None:
        rng = stream(seed, "perms")
        perms = [tuple(int(c) + 1 for c in rng.permutation(params.M)) for _ in range(params.N - 1)]
    perms = tuple(tuple(p) for p in perms)
    if len(perms) != params.N - 1 or any(sorted(p) != list(range(1, params.M + 1)) for p in perms):
        raise ValueError("need N-1 permutations of 1..M")
    return MdsPlan(G, perms)


def fresh_index(N: int, db: int, group: int) -> int:
    """Symbol index of the desired symbols coded in ``group`` at ``db``."""
    return N + (db - 1) * (N - 1) + group


def privacy_matrix(plan: MdsPlan, desired: Sequence[int]) -> FieldMatrix:
    """Block-diagonal ``H_P``: identity, then ``G S_n`` restricted to the desired columns."""
    P = plan.generator.rows
    blocks = [FieldMatrix.identity(P, plan.generator.q)]
    blocks += [plan.coded(j).select_columns([m - 1 for m in desired]) for j in range(1, len(plan.perms) + 1)]
    size = P * len(blocks)
    ent = [[0] * size for _ in range(size)]
    for b, blk in enumerate(blocks):
        for r in range(P):
            for c in range(P):
                ent[b * P + r][b * P + c] = blk[r, c]
    return FieldMatrix.from_rows(ent, plan.generator.q)


def mds_build_queries(
    params: ProblemParams,
    request: RetrievalRequest,
    perms: Sequence[Sequence[int]] | None = None,
    shuffle: bool = True,
) -> QueryTable:
    request.check(params)
    if params.L != params.N ** 2:
        raise ValueError("the MDS scheme needs L = N^2")
    plan = mds_plan(params, request.seed, perms)
    M, N, q = params.M, params.N, params.q
    desired = set(request.desired)
    shuffler = stream(request.seed, "shuffle")
    dbs: list[list[Query]] = []
    for n in range(1, N + 1):
        queries = [
            Query((Term(m, n, 1),), round=1, stage=1, category=int(m in desired), seq=m - 1,
                  fresh=(m, n) if m in desired else None)
            for m in range(1, M + 1)
        ]
        others = [o for o in range(1, N + 1) if o != n]
        for j, src in enumerate(others, 1):
            GS = plan.coded(j)
            fi = fresh_index(N, n, j)
            for r in range(GS.rows):
                terms = tuple(
                    Term(m, fi if m in desired else src, GS[r, m - 1])
                    for m in range(1, M + 1)
                    if GS[r, m - 1]
                )
                queries.append(Query(terms, round=2, stage=j, category=params.P, seq=len(queries)))
        if shuffle:
            queries = [queries[i] for i in shuffler.permutation(len(queries))]
        dbs.append(queries)
    return QueryTable(params, "mds", request.desired, dbs, meta={"perms": plan.perms, "q": q})


def mds_decode(table: QueryTable, answers: AnswerSet, interleavers: np.ndarray | None = None) -> dict[int, np.ndarray]:
    """Recover the desired messages.

    Round-one singles are read off directly. Each round-two group has its
    undesired symbols cancelled with the singles fetched from the source
    database, leaving a P x P system that the MDS property makes invertible.
    Returns de-interleaved messages when ``interleavers`` is given, otherwise
    the interleaved symbol vectors.
    """
    p = table.params
    q = p.q
    desired = table.desired
    known: dict[tuple[int, int], int] = {}
    groups: dict[tuple[int, int], list[tuple[Query, int]]] = {}
    for n, (queries, ans) in enumerate(zip(table.databases, answers), 1):
        for qr, a in zip(queries, ans):
            if qr.round == 1:
                (t,) = qr.terms
                known[(t.message, t.index)] = int(a) * pow(t.coeff, q - 2, q) % q
            else:
                groups.setdefault((n, qr.stage), []).append((qr, int(a)))

    for (n, j), eqs in sorted(groups.items()):
        if len(eqs) != p.P:
            raise DecodeMismatch(f"database {n} group {j}: {len(eqs)} equations for {p.P} unknowns")
        unknowns = sorted({(t.message, t.index) for qr, _ in eqs for t in qr.terms if t.message in desired})
        col = {u: k for k, u in enumerate(unknowns)}
        rows, rhs = [], []
        for qr, a in eqs:
            row = [0] * len(unknowns)
            for t in qr.terms:
                if t.message in desired:
                    row[col[(t.message, t.index)]] = t.coeff
                else:
                    a -= t.coeff * known[(t.message, t.index)]
            rows.append(row)
            rhs.append(a % q)
        sol = solve_linear(FieldMatrix.from_rows(rows, q), rhs)
        if not sol.unique or len(unknowns) != p.P:
            raise DecodeMismatch(f"database {n} group {j} is not uniquely solvable")
        for u, v in zip(unknowns, sol.values):
            known[u] = v

    out = {}
    for m in desired:
        x = np.empty(p.L, dtype=np.int64)
        for i in range(1, p.L + 1):
            if (m, i) not in known:
                raise DecodeMismatch(f"symbol {m}:{i} was never retrieved")
            x[i - 1] = known[(m, i)]
        if interleavers is not None:
            w = np.empty_like(x)
            w[interleavers[m - 1]] = x
            x = w
        out[m] = x
    return out


def mds_rate(params_or_M, P: int | None = None, N: int | None = None) -> Fraction:
    """Desired symbols over downloads: PN / ((M - P) + PN)."""
    if isinstance(params_or_M, ProblemParams):
        M, P, N = params_or_M.M, params_or_M.P, params_or_M.N
    else:
        M = params_or_M
    return Fraction(P * N, (M - P) + P * N)
