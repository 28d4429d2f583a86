"""Messages, replicated databases, queries and answers.

Symbols are addressed as ``(message, index)`` with both 1-based, matching the
``a_1, b_3, ...`` notation of printed query tables. Query indices always refer
to *interleaved* positions ``x_m(i) = w_m(pi_m(i))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import IndexOutOfRange
from .gf_core import is_prime

STREAMS = ("content", "interleave", "perms", "shuffle")


def streams(seed: int) -> dict[str, np.random.Generator]:
    """Split ``seed`` into independent named generators.

    The split never depends on the desired set, so two requests made with the
    same seed see identical randomness apart from their choice of messages.
    """
    return {name: stream(seed, name) for name in STREAMS}


def stream(seed: int, name: str) -> np.random.Generator:
    """One named child of ``seed``; identical to the matching entry of :func:`streams`."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAMS.index(name),)))


@dataclass(frozen=True)
class ProblemParams:
    M: int
    P: int
    N: int
    q: int
    L: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not 1 <= self.P <= self.M:
            raise ValueError("need 1 <= P <= M")
        if self.N < 2:
            raise ValueError("need N >= 2 databases")
        if not is_prime(self.q):
            raise ValueError(f"q={self.q} is not prime")
        if self.L < 1:
            raise ValueError("L must be >= 1")


@dataclass(frozen=True)
class RetrievalRequest:
    desired: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        d = tuple(sorted(int(m) for m in self.desired))
        if len(set(d)) != len(d):
            raise ValueError("desired indices must be distinct")
        object.__setattr__(self, "desired", d)

    def check(self, params: ProblemParams) -> None:
        if len(self.desired) != params.P:
            raise ValueError(f"expected {params.P} desired messages, got {len(self.desired)}")
        if any(not 1 <= m <= params.M for m in self.desired):
            raise ValueError(f"desired indices must lie in 1..{params.M}")

    def undesired(self, M: int) -> tuple[int, ...]:
        return tuple(m for m in range(1, M + 1) if m not in self.desired)


def all_requests(M: int, P: int, seed: int = 0) -> list[RetrievalRequest]:
    return [RetrievalRequest(c, seed) for c in combinations(range(1, M + 1), P)]


class Term(NamedTuple):
    message: int
    index: int
    coeff: int


@dataclass(frozen=True)
class Query:
    """One downloaded linear combination plus bookkeeping the user keeps private.

    ``seq`` is the construction ordinal within its database. ``side`` points at
    the producer query ``(db, seq)`` whose undesired terms this query reuses,
    ``fresh`` names the new desired symbol it carries, and ``pooled`` lists
    desired symbols already decodable from other databases.
    """

    terms: tuple[Term, ...]
    round: int = 1
    stage: int = 1
    category: int = 0
    seq: int = 0
    side: tuple[int, int] | None = None
    fresh: tuple[int, int] | None = None
    pooled: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(Term(*t) for t in self.terms))
        if any(t.coeff == 0 for t in self.terms):
            raise ValueError("query coefficients must be nonzero")


@dataclass
class QueryTable:
    """Per-database query lists, stored in upload (shuffled) order."""

    params: ProblemParams
    scheme: str
    desired: tuple[int, ...]
    databases: list[list[Query]]
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.databases)

    def counts(self) -> list[int]:
        return [len(db) for db in self.databases]

    @property
    def total(self) -> int:
        return sum(self.counts())

    def by_seq(self, db: int) -> dict[int, int]:
        """Map construction ordinal -> position in the upload order of database ``db``."""
        return {qr.seq: pos for pos, qr in enumerate(self.databases[db - 1])}

    def construction_order(self, db: int) -> list[Query]:
        return sorted(self.databases[db - 1], key=lambda qr: (qr.round, qr.stage, qr.seq))

    def without(self, db: int, pos: int) -> "QueryTable":
        """Copy with one query removed (used to break decodability on purpose)."""
        dbs = [list(d) for d in self.databases]
        del dbs[db - 1][pos]
        return replace(self, databases=dbs, meta=dict(self.meta))


AnswerSet = list[np.ndarray]


@dataclass(frozen=True)
class MessageStore:
    params: ProblemParams
    seed: int
    messages: np.ndarray
    interleavers: np.ndarray

    def __post_init__(self):
        M, L = self.params.M, self.params.L
        if self.messages.shape != (M, L) or self.interleavers.shape != (M, L):
            raise ValueError("store arrays must be M x L")
        self.messages.setflags(write=False)
        self.interleavers.setflags(write=False)

    @property
    def interleaved(self) -> np.ndarray:
        """``X[m-1, i-1] = x_m(i) = w_m(pi_m(i))``."""
        return np.take_along_axis(self.messages, self.interleavers, axis=1)

    def replica(self, db: int) -> np.ndarray:
        if not 1 <= db <= self.params.N:
            raise IndexOutOfRange(f"no database {db}")
        return self.interleaved

    def deinterleave(self, m: int, x: np.ndarray) -> np.ndarray:
        w = np.empty_like(x)
        w[self.interleavers[m - 1]] = x
        return w

    def desired_messages(self, request: RetrievalRequest) -> dict[int, np.ndarray]:
        return {m: self.messages[m - 1].copy() for m in request.desired}


def interleavers_from_seed(params: ProblemParams, seed: int) -> np.ndarray:
    rng = stream(seed, "interleave")
    return np.stack([rng.permutation(params.L) for _ in range(params.M)]).astype(np.int64)


def generate_store(params: ProblemParams, seed: int) -> MessageStore:
    """Uniform i.i.d. message symbols plus one private interleaver per message."""
    rng = stream(seed, "content")
    W = rng.integers(0, params.q, size=(params.M, params.L), dtype=np.int64)
    return MessageStore(params, seed, W, interleavers_from_seed(params, seed))


def zero_store(params: ProblemParams, seed: int = 0) -> MessageStore:
    W = np.zeros((params.M, params.L), dtype=np.int64)
    return MessageStore(params, seed, W, interleavers_from_seed(params, seed))


def answer_one(queries: Sequence[Query], X: np.ndarray, q: int) -> np.ndarray:
    M, L = X.shape
    qi, mi, si, co = [], [], [], []
    for pos, qr in enumerate(queries):
        for t in qr.terms:
            if not (1 <= t.message <= M and 1 <= t.index <= L):
                raise IndexOutOfRange(f"term {t} outside {M} x {L} store")
            qi.append(pos)
            mi.append(t.message - 1)
            si.append(t.index - 1)
            co.append(t.coeff)
    out = np.zeros(len(queries), dtype=np.int64)
    if qi:
        vals = X[np.array(mi), np.array(si)] * (np.array(co, dtype=np.int64) % q)
        np.add.at(out, np.array(qi), vals % q)
    return out % q


def answer(table: QueryTable, store: MessageStore) -> AnswerSet:
    """Evaluate every database's queries against its replica."""
    return [answer_one(db, store.replica(n), store.params.q) for n, db in enumerate(table.databases, 1)]


def dump_store(store: MessageStore) -> str:
    p = store.params
    lines = [f"{p.M} {p.P} {p.N} {p.q} {p.L} {store.seed}"]
    lines += [" ".join(str(int(v)) for v in row) for row in store.messages]
    return "\n".join(lines) + "\n"


def load_store(text: str) -> MessageStore:
    """Inverse of :func:`dump_store`; interleavers are regenerated from the seed."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    M, P, N, q, L, seed = (int(v) for v in lines[0].split())
    params = ProblemParams(M, P, N, q, L)
    rows = [[int(v) for v in ln.split()] for ln in lines[1:]]
    W = np.array(rows, dtype=np.int64).reshape(M, L)
    if W.min(initial=0) < 0 or W.max(initial=0) >= q:
        raise ValueError("symbol outside GF(q)")
    return MessageStore(params, seed, W, interleavers_from_seed(params, seed))
