"""Prime-field arithmetic, small matrices over GF(q) and sparse Gaussian elimination.

Elements are plain ints in ``[0, q)`` wherever performance matters; the
:class:`FieldElement` wrapper exists for readable call sites and tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import FieldTooSmall, Inconsistent, ZeroInverse


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    c = n + 1
    while not is_prime(c):
        c += 1
    return c


def inv_mod(a: int, q: int) -> int:
    a %= q
    if a == 0:
        raise ZeroInverse(f"0 has no inverse in GF({q})")
    return pow(a, q - 2, q)


@dataclass(frozen=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"modulus {self.q} is not prime")
        object.__setattr__(self, "value", self.value % self.q)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.q != self.q:
                raise ValueError("field mismatch")
            return other.value
        return int(other)

    def __add__(self, other):
        return FieldElement(self.value + self._coerce(other), self.q)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - self._coerce(other), self.q)

    def __rsub__(self, other):
        return FieldElement(self._coerce(other) - self.value, self.q)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other), self.q)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.q)

    def __truediv__(self, other):
        return self * field_inv(FieldElement(self._coerce(other), self.q))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.q == other.q and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.q))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"GF{self.q}({self.value})"


def field_inv(a: FieldElement) -> FieldElement:
    """Multiplicative inverse; raises :class:`ZeroInverse` for 0."""
    return FieldElement(inv_mod(a.value, a.q), a.q)


@dataclass(frozen=True)
class FieldMatrix:
    """Row-major matrix over GF(q)."""

    rows: int
    cols: int
    q: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entries length must equal rows*cols")
        object.__setattr__(self, "entries", tuple(int(e) % self.q for e in self.entries))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], q: int) -> "FieldMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), ncols, q, tuple(v for r in rows for v in r))

    @classmethod
    def identity(cls, n: int, q: int) -> "FieldMatrix":
        return cls(n, n, q, tuple(int(i == j) for i in range(n) for j in range(n)))

    def __getitem__(self, rc: tuple[int, int]) -> int:
        r, c = rc
        return self.entries[r * self.cols + c]

    def row(self, r: int) -> tuple[int, ...]:
        return self.entries[r * self.cols:(r + 1) * self.cols]

    def to_rows(self) -> list[list[int]]:
        return [list(self.row(r)) for r in range(self.rows)]

    def column(self, c: int) -> tuple[int, ...]:
        return tuple(self[r, c] for r in range(self.rows))

    def select_columns(self, cols: Sequence[int]) -> "FieldMatrix":
        return FieldMatrix.from_rows([[self[r, c] for c in cols] for r in range(self.rows)], self.q)

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        if self.cols != other.rows or self.q != other.q:
            raise ValueError("shape or field mismatch")
        out = [
            [sum(self[i, k] * other[k, j] for k in range(self.cols)) % self.q for j in range(other.cols)]
            for i in range(self.rows)
        ]
        return FieldMatrix.from_rows(out, self.q)

    def rank(self) -> int:
        sol = solve_sparse(_as_sparse_rows(self), [0] * self.rows, self.q, self.cols)
        return sol.rank


def permutation_matrix(perm: Sequence[int], q: int) -> FieldMatrix:
    """Matrix ``S`` with ``(G @ S)[:, j] == G[:, perm[j] - 1]`` (``perm`` is 1-based)."""
    n = len(perm)
    ent = [[0] * n for _ in range(n)]
    for j, p in enumerate(perm):
        ent[p - 1][j] = 1
    return FieldMatrix.from_rows(ent, q)


def rs_generator(P: int, M: int, q: int) -> FieldMatrix:
    """P x M Reed-Solomon (Vandermonde) generator with entry (r, c) = c**r mod q.

    Evaluation points are the column labels 1..M reduced mod q, so they are
    distinct exactly when ``q >= M``; with ``q == M`` the last point is 0,
    which still gives an MDS code.
    """
    if not is_prime(q):
        raise ValueError(f"q={q} is not prime")
    if not 1 <= P <= M:
        raise ValueError("need 1 <= P <= M")
    if q < M:
        raise FieldTooSmall(f"GF({q}) has fewer than M={M} distinct evaluation points")
    return FieldMatrix.from_rows([[pow(c, r, q) for c in range(1, M + 1)] for r in range(P)], q)


@dataclass
class Solution:
    """Result of Gaussian elimination over GF(q).

    ``values`` is one particular solution (free coordinates set to 0);
    ``determined[j]`` tells whether coordinate ``j`` is the same in every solution.
    """

    values: list[int]
    determined: list[bool]
    rank: int
    pivots: list[int] = field(default_factory=list)

    @property
    def unique(self) -> bool:
        return all(self.determined)


def _as_sparse_rows(A: FieldMatrix) -> list[dict[int, int]]:
    return [{c: v for c, v in enumerate(A.row(r)) if v} for r in range(A.rows)]


def solve_sparse(
    rows: Iterable[Mapping[int, int]], rhs: Sequence[int], q: int, ncols: int
) -> Solution:
    """Solve a sparse system over GF(q).

    Rows are ``{column: coefficient}`` maps. Elimination pivots on the smallest
    live column of each incoming row, then back-substitutes to reduced echelon
    form so that every pivot row holds only its pivot and free columns.
    """
    basis: dict[int, tuple[dict[int, int], int]] = {}
    for raw, b in zip(rows, rhs):
        row = {c: v % q for c, v in raw.items() if v % q}
        b %= q
        while row:
            c = min(row)
            hit = basis.get(c)
            if hit is None:
                inv = inv_mod(row[c], q)
                if inv != 1:
                    row = {k: v * inv % q for k, v in row.items()}
                    b = b * inv % q
                basis[c] = (row, b)
                break
            prow, pb = hit
            f = row[c]
            for k, v in prow.items():
                nv = (row.get(k, 0) - f * v) % q
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
            b = (b - f * pb) % q
        else:
            if b:
                raise Inconsistent("system has no solution")

    # back substitution, highest pivot first
    for p in sorted(basis, reverse=True):
        row, b = basis[p]
        for c in [k for k in row if k != p and k in basis]:
            f = row.get(c)
            if not f:
                continue
            crow, cb = basis[c]
            for k, v in crow.items():
                nv = (row.get(k, 0) - f * v) % q
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
            b = (b - f * cb) % q
        basis[p] = (row, b)

    values = [0] * ncols
    determined = [False] * ncols
    for p, (row, b) in basis.items():
        values[p] = b
        determined[p] = len(row) == 1
    return Solution(values, determined, len(basis), sorted(basis))


def solve_linear(A: FieldMatrix, b: Sequence[int]) -> Solution:
    """Solve ``A x = b`` over GF(A.q); raises :class:`Inconsistent` if unsolvable."""
    if A.rows != len(b):
        raise ValueError("A.rows must equal len(b)")
    return solve_sparse(_as_sparse_rows(A), list(b), A.q, A.cols)
