"""Human-readable and CSV renderings of query tables.

Text layout, one equation per line::

    scheme mds M=3 P=2 N=2 q=5 L=4 desired=1,2
    [database 1]
    round 1 stage 1
    a_1
    ...
    round 2 stage 1
    a_3 + b_3 + c_2
    2a_3 + b_3 + 3c_2

Messages are named ``a``..``z`` when ``M <= 26`` and ``w1, w2, ...``
otherwise. Equations appear in construction order, not upload order, so
the text is a faithful record of the table's content but not of the shuffle.
"""

from __future__ import annotations

import csv
import io
import re
import string

from .message_store import ProblemParams, Query, QueryTable, Term

_HEADER = re.compile(r"scheme (\S+) M=(\d+) P=(\d+) N=(\d+) q=(\d+) L=(\d+) desired=([\d,]+)$")
_TERM = re.compile(r"(\d*)([a-z]|w\d+)_(\d+)$")


def message_name(m: int, M: int) -> str:
    return string.ascii_lowercase[m - 1] if M <= 26 else f"w{m}"


def _message_id(name: str, M: int) -> int:
    if M <= 26:
        if len(name) != 1:
            raise ValueError(f"expected a letter for message, got {name!r}")
        m = ord(name) - ord("a") + 1
    else:
        if not name.startswith("w"):
            raise ValueError(f"expected w<k> for message, got {name!r}")
        m = int(name[1:])
    if not 1 <= m <= M:
        raise ValueError(f"message {name!r} outside 1..{M}")
    return m


def format_term(t: Term, M: int) -> str:
    c = "" if t.coeff == 1 else str(t.coeff)
    return f"{c}{message_name(t.message, M)}_{t.index}"


def format_equation(qr: Query, M: int) -> str:
    return " + ".join(format_term(t, M) for t in qr.terms)


def parse_equation(text: str, M: int, q: int) -> tuple[Term, ...]:
    terms = []
    for chunk in text.split(" + "):
        hit = _TERM.match(chunk.strip())
        if not hit:
            raise ValueError(f"cannot parse term {chunk!r}")
        coeff = int(hit.group(1)) if hit.group(1) else 1
        if not 1 <= coeff < q:
            raise ValueError(f"coefficient {coeff} outside GF({q})*")
        terms.append(Term(_message_id(hit.group(2), M), int(hit.group(3)), coeff))
    return tuple(terms)


def format_table(table: QueryTable) -> str:
    p = table.params
    lines = [f"scheme {table.scheme} M={p.M} P={p.P} N={p.N} q={p.q} L={p.L} "
             f"desired={','.join(map(str, table.desired))}"]
    for n in range(1, table.N + 1):
        lines.append(f"[database {n}]")
        block = None
        for qr in table.construction_order(n):
            if (qr.round, qr.stage) != block:
                block = (qr.round, qr.stage)
                lines.append(f"round {qr.round} stage {qr.stage}")
            lines.append(format_equation(qr, p.M))
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> QueryTable:
    """Inverse of :func:`format_table` up to private bookkeeping.

    Categories are recomputed as the number of desired messages in each
    equation; side-information pointers are not recoverable from text.
    """
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty table")
    head = _HEADER.match(lines[0])
    if not head:
        raise ValueError(f"bad header line {lines[0]!r}")
    scheme = head.group(1)
    M, P, N, q, L = (int(head.group(i)) for i in range(2, 7))
    desired = tuple(int(v) for v in head.group(7).split(","))
    params = ProblemParams(M, P, N, q, L)
    dbs: list[list[Query]] = []
    block: tuple[int, int] | None = None
    for ln in lines[1:]:
        if ln.startswith("[database "):
            if int(ln[len("[database "):-1]) != len(dbs) + 1:
                raise ValueError(f"databases out of order at {ln!r}")
            dbs.append([])
            block = None
        elif ln.startswith("round "):
            _, r, _, s = ln.split()
            block = (int(r), int(s))
        elif ln:
            if not dbs or block is None:
                raise ValueError(f"equation outside a round block: {ln!r}")
            terms = parse_equation(ln, M, q)
            cat = len({t.message for t in terms if t.message in desired})
            dbs[-1].append(Query(terms, block[0], block[1], cat, len(dbs[-1])))
    if len(dbs) != N:
        raise ValueError(f"expected {N} databases, found {len(dbs)}")
    return QueryTable(params, scheme, desired, dbs, meta={"q": q})


def table_csv(table: QueryTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["db", "round", "stage", "category", "terms"])
    for n in range(1, table.N + 1):
        for qr in table.construction_order(n):
            w.writerow([n, qr.round, qr.stage, qr.category, format_equation(qr, table.params.M)])
    return buf.getvalue()
