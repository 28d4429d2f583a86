"""Scheme-independent checks: a linear-algebra decode oracle and a privacy auditor.

The oracle ignores all scheme bookkeeping. It treats every interleaved symbol
that appears in the upload as an unknown, solves the whole downloaded system
over GF(q), and reports which desired coordinates are pinned down.

The auditor compares what each database sees across different desired sets.
A database's view is summarised by a canonical signature with two layers:

* ``shape`` forgets message labels entirely (relabel-invariant);
* ``labeled`` keeps message labels but canonicalises symbol indices.

Both must agree across desired sets. The labeled layer is what exposes a
scheme that only ever touches the desired messages.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import DesiredUndetermined
from .gf_core import solve_sparse
from .scheme_mds import mds_build_queries, mds_params
from .scheme_rounds import rounds_build_queries, rounds_params
from .stage_planner import stage_counts
from .message_store import (
    AnswerSet,
    ProblemParams,
    Query,
    QueryTable,
    RetrievalRequest,
    Term,
    all_requests,
)


@dataclass
class OracleResult:
    messages: dict[int, np.ndarray]
    determined: int
    unknowns: int
    rank: int


def oracle_decode(
    table: QueryTable,
    answers: AnswerSet,
    request: RetrievalRequest | None = None,
    params: ProblemParams | None = None,
    interleavers: np.ndarray | None = None,
) -> OracleResult:
    """Solve the downloaded system directly and read off every desired symbol.

    Raises :class:`DesiredUndetermined` if any desired coordinate is free and
    :class:`~mpir.errors.Inconsistent` if the answers contradict each other.
    """
    params = params or table.params
    desired = request.desired if request is not None else table.desired
    q, L = params.q, params.L
    # desired columns first so elimination pivots on them early
    order = {m: r for r, m in enumerate(list(desired) + [m for m in range(1, params.M + 1) if m not in desired])}

    def col(t: Term) -> int:
        return order[t.message] * L + t.index - 1

    rows, rhs = [], []
    for queries, ans in zip(table.databases, answers):
        if len(queries) != len(ans):
            raise ValueError("answer count does not match query count")
        for qr, a in zip(queries, ans):
            row: dict[int, int] = {}
            for t in qr.terms:
                c = col(t)
                row[c] = (row.get(c, 0) + t.coeff) % q
            rows.append(row)
            rhs.append(int(a))
    ncols = params.M * L
    sol = solve_sparse(rows, rhs, q, ncols)

    out: dict[int, np.ndarray] = {}
    missing = []
    for m in desired:
        base = order[m] * L
        flags = sol.determined[base:base + L]
        if not all(flags):
            missing += [(m, i + 1) for i, ok in enumerate(flags) if not ok]
            continue
        x = np.array(sol.values[base:base + L], dtype=np.int64)
        if interleavers is not None:
            w = np.empty_like(x)
            w[interleavers[m - 1]] = x
            x = w
        out[m] = x
    if missing:
        shown = ", ".join(f"{m}:{i}" for m, i in missing[:5])
        raise DesiredUndetermined(f"{len(missing)} desired coordinates undetermined ({shown}...)")
    used = {col(t) for qs in table.databases for qr in qs for t in qr.terms}
    return OracleResult(out, len(desired) * L, len(used), sol.rank)


# ---------------------------------------------------------------- signatures


@dataclass(frozen=True)
class QuerySignature:
    shape: tuple
    labeled: tuple


def _profiles(queries: Sequence[Query]) -> dict[int, Counter]:
    """Per message: multiset of (term count, coefficient, uses of that symbol at this database)."""
    uses = Counter((t.message, t.index) for qr in queries for t in qr.terms)
    prof: dict[int, Counter] = {}
    for qr in queries:
        for t in qr.terms:
            prof.setdefault(t.message, Counter())[(len(qr.terms), t.coeff, uses[(t.message, t.index)])] += 1
    return prof


def query_signature(queries: Sequence[Query], M: int) -> QuerySignature:
    """Canonical summary of one database's upload; symbol indices never enter it."""
    prof = _profiles(queries)
    by_msg = [tuple(sorted(prof.get(m, Counter()).items())) for m in range(1, M + 1)]
    shape = (
        tuple(sorted((len(qr.terms), tuple(sorted(t.coeff for t in qr.terms))) for qr in queries)),
        tuple(sorted(by_msg)),
    )
    labeled = (
        tuple(sorted(tuple(sorted((t.message, t.coeff) for t in qr.terms)) for qr in queries)),
        tuple(by_msg),
    )
    return QuerySignature(shape, labeled)


def relabel(table: QueryTable, mapping: dict[int, int]) -> QueryTable:
    """Same table with message ``m`` renamed to ``mapping[m]`` (for sanity checks)."""
    dbs = [
        [Query(tuple(Term(mapping[t.message], t.index, t.coeff) for t in qr.terms), qr.round, qr.stage,
               qr.category, qr.seq) for qr in qs]
        for qs in table.databases
    ]
    return QueryTable(table.params, table.scheme, tuple(sorted(mapping[m] for m in table.desired)), dbs, dict(table.meta))


# ---------------------------------------------------------------- builders

Builder = Callable[[RetrievalRequest], QueryTable]


def scheme_builder(scheme: str, M: int, P: int, N: int, q: int | None = None) -> tuple[ProblemParams, Builder]:
    if scheme == "mds":
        params = mds_params(M, P, N, q)
        return params, lambda req: mds_build_queries(params, req)
    if scheme == "rounds":
        plan = stage_counts(M, P, N)
        params = rounds_params(M, P, N, q or 2, plan)
        return params, lambda req: rounds_build_queries(params, req, plan)
    if scheme == "desired-only":
        params = mds_params(M, P, N, q)
        return params, lambda req: desired_only_queries(params, req)
    if scheme == "asymmetric":
        params = mds_params(M, P, N, q)
        return params, lambda req: asymmetric_mds_queries(params, req)
    raise ValueError(f"unknown scheme {scheme!r}")


def desired_only_queries(params: ProblemParams, request: RetrievalRequest) -> QueryTable:
    """Negative control: fetch the desired symbols in the clear, split across databases."""
    request.check(params)
    N, L = params.N, params.L
    dbs: list[list[Query]] = [[] for _ in range(N)]
    for m in request.desired:
        for i in range(1, L + 1):
            qs = dbs[(i - 1) % N]
            qs.append(Query((Term(m, i, 1),), 1, 1, 1, len(qs), fresh=(m, i)))
    return QueryTable(params, "desired-only", request.desired, dbs)


def asymmetric_mds_queries(params: ProblemParams, request: RetrievalRequest) -> QueryTable:
    """Negative control: the MDS scheme with round one skipping undesired messages.

    Still decodable only if side information were free, and its round-one
    download reveals the desired set directly.
    """
    table = mds_build_queries(params, request)
    dbs = [[qr for qr in qs if not (qr.round == 1 and qr.terms[0].message not in request.desired)]
           for qs in table.databases]
    return QueryTable(params, "asymmetric", request.desired, dbs, dict(table.meta))


# ---------------------------------------------------------------- audits


@dataclass
class AuditReport:
    scheme: str
    M: int
    P: int
    N: int
    structural_pass: list[bool] = field(default_factory=list)
    tv_estimates: dict[tuple[tuple[int, ...], tuple[int, ...], int], float] = field(default_factory=dict)
    thresholds: dict[tuple[tuple[int, ...], tuple[int, ...], int], float] = field(default_factory=dict)
    samples: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def statistical_pass(self) -> bool:
        return all(self.tv_estimates[k] < self.thresholds[k] for k in self.tv_estimates)

    @property
    def passed(self) -> bool:
        ok = all(self.structural_pass) if self.structural_pass else True
        return ok and (self.statistical_pass if self.tv_estimates else True)

    def rows(self) -> list[tuple]:
        out = [("structural", n, "", "", "pass" if ok else "FAIL") for n, ok in enumerate(self.structural_pass, 1)]
        for (a, b, n), tv in sorted(self.tv_estimates.items()):
            thr = self.thresholds[(a, b, n)]
            out.append(("tv", n, _fmt_set(a), _fmt_set(b), f"{tv:.4f} < {thr:.4f}" if tv < thr else f"{tv:.4f} >= {thr:.4f}"))
        return out


def _fmt_set(s: tuple[int, ...]) -> str:
    return "{" + ",".join(map(str, s)) + "}"


def structural_privacy_check(scheme: str, M: int, P: int, N: int, seed: int = 0, q: int | None = None) -> AuditReport:
    """Build the table for every desired set with the same seed and compare signatures per database."""
    params, build = scheme_builder(scheme, M, P, N, q)
    report = AuditReport(scheme, M, P, N)
    sigs: list[dict[QuerySignature, list[tuple[int, ...]]]] = [dict() for _ in range(N)]
    for req in all_requests(M, P, seed):
        table = build(req)
        for n, qs in enumerate(table.databases):
            sigs[n].setdefault(query_signature(qs, M), []).append(req.desired)
    for n, seen in enumerate(sigs, 1):
        ok = len(seen) == 1
        report.structural_pass.append(ok)
        if not ok:
            report.notes.append(f"database {n}: {len(seen)} distinct signatures across desired sets")
    return report


def signature_distribution(build: Builder, desired: tuple[int, ...], M: int, N: int, R: int, seed0: int = 0) -> list[Counter]:
    """Empirical distribution of each database's labeled signature over ``R`` seeds."""
    dists = [Counter() for _ in range(N)]
    for s in range(seed0, seed0 + R):
        table = build(RetrievalRequest(desired, s))
        for n, qs in enumerate(table.databases):
            dists[n][hash(query_signature(qs, M).labeled)] += 1
    return dists


def total_variation(p: Counter, q: Counter) -> float:
    na, nb = sum(p.values()), sum(q.values())
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p[k] / na - q[k] / nb) for k in keys)


def statistical_privacy_check(
    scheme: str,
    M: int,
    P: int,
    N: int,
    subsets: Sequence[Sequence[int]] | None = None,
    R: int = 10_000,
    q: int | None = None,
) -> AuditReport:
    """Monte Carlo comparison of signature distributions between desired sets.

    Each desired set gets its own block of ``R`` seeds, so the samples are
    independent. A pair passes when its total-variation estimate is below
    ``3 sqrt(S / R)`` with ``S`` the joint support size. This is a noise
    heuristic, not a proof of privacy.
    """
    params, build = scheme_builder(scheme, M, P, N, q)
    subsets = [tuple(sorted(s)) for s in subsets] if subsets else [tuple(c) for c in combinations(range(1, M + 1), P)]
    report = AuditReport(scheme, M, P, N, samples=R)
    dists = {s: signature_distribution(build, s, M, N, R, seed0=k * R) for k, s in enumerate(subsets)}
    for a, b in combinations(subsets, 2):
        for n in range(N):
            pa, pb = dists[a][n], dists[b][n]
            support = len(set(pa) | set(pb))
            report.tv_estimates[(a, b, n + 1)] = total_variation(pa, pb)
            report.thresholds[(a, b, n + 1)] = 3 * math.sqrt(support / R)
    return report
