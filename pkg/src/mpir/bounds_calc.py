"""Closed-form capacities, bounds and comparison rates.

Everything with a rational closed form is a :class:`~fractions.Fraction`.
The achievable lower bound for ``P < M/2`` is available two ways: exactly,
from the integer stage plan, and in floating point from the characteristic
roots; reports carry both.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Iterator

from .errors import DomainError
from .stage_planner import rational_rate, spectral_rate, stage_counts


def _valid(M: int, P: int, N: int) -> None:
    if not 1 <= P <= M:
        raise DomainError("need 1 <= P <= M")
    if N < 2:
        raise DomainError("need N >= 2")


def single_capacity(M: int, N: int) -> Fraction:
    """Capacity of retrieving one of ``M`` messages: (1 - 1/N) / (1 - N^-M)."""
    return (1 - Fraction(1, N)) / (1 - Fraction(1, N) ** M)


def capacity_high(M: int, P: int, N: int) -> Fraction:
    """Sum capacity when at least half of the messages are wanted."""
    _valid(M, P, N)
    if 2 * P < M:
        raise DomainError(f"closed form needs 2P >= M, got M={M}, P={P}")
    return Fraction(P * N, P * N + M - P)


def capacity_int(M: int, P: int, N: int) -> Fraction:
    """Sum capacity when ``P`` divides ``M``: the single-message formula with M/P messages."""
    _valid(M, P, N)
    if M % P:
        raise DomainError(f"P={P} does not divide M={M}")
    return single_capacity(M // P, N)


def upper_bound(M: int, P: int, N: int) -> Fraction:
    _valid(M, P, N)
    k = M // P
    denom = sum(Fraction(1, N ** i) for i in range(k)) + Fraction(M - k * P, P) * Fraction(1, N ** k)
    return 1 / denom


def delta(M: int, P: int, N: int) -> Fraction:
    """Extra desired symbols per download picked up by the single-message scheme."""
    _valid(M, P, N)
    return Fraction((P - 1) * (N - 1), N ** M - 1)


def repetition_rate(M: int, P: int, N: int) -> Fraction:
    """Sum rate of running the optimal single-message scheme once per desired message."""
    return single_capacity(M, N) + delta(M, P, N)


def lower_bound(M: int, P: int, N: int) -> tuple[Fraction, float]:
    """Achievable sum rate as (exact, spectral float).

    For ``2P >= M`` both are the exact capacity; otherwise the exact value
    comes from the stage plan and the float from the characteristic roots.
    """
    _valid(M, P, N)
    if 2 * P >= M:
        c = capacity_high(M, P, N)
        return c, float(c)
    return rational_rate(stage_counts(M, P, N, balanced=False)), spectral_rate(M, P, N)


@dataclass(frozen=True)
class RegionCorners:
    C: Fraction
    delta: Fraction
    C_P: Fraction | None
    corners: tuple[tuple[Fraction, ...], ...]


def region_corners(M: int, P: int, N: int) -> RegionCorners:
    """Non-trivial corner points of the achievable per-message rate region.

    Each permutation of (C, delta, ..., delta) comes from the single-message
    scheme aimed at one desired message; the symmetric point (C^P, ..., C^P)
    is added when ``2P >= M``. Points on the axes are left implicit.
    """
    _valid(M, P, N)
    C = single_capacity(M, N)
    d = Fraction(N - 1, N ** M - 1)
    # the distinct permutations of (C, d, ..., d): C sits in one of P positions
    pts = [tuple(C if i == j else d for i in range(P)) for j in range(P)]
    CP = None
    if 2 * P >= M:
        CP = Fraction(N, P * N + M - P)
        sym = (CP,) * P
        if sym not in pts:
            pts.append(sym)
    return RegionCorners(C, d, CP, tuple(pts))


@dataclass(frozen=True)
class BoundsReport:
    M: int
    P: int
    N: int
    capacity_high: Fraction | None
    capacity_int: Fraction | None
    upper: Fraction
    lower: float
    lower_exact: Fraction
    repetition: Fraction
    delta: Fraction
    region: RegionCorners
    beta: int

    @property
    def gap(self) -> Fraction:
        return self.upper - self.lower_exact

    @property
    def gap_spectral(self) -> float:
        return float(self.upper) - self.lower


def bounds_report(M: int, P: int, N: int) -> BoundsReport:
    _valid(M, P, N)
    exact, spectral = lower_bound(M, P, N)
    return BoundsReport(
        M, P, N,
        capacity_high(M, P, N) if 2 * P >= M else None,
        capacity_int(M, P, N) if M % P == 0 else None,
        upper_bound(M, P, N),
        spectral,
        exact,
        repetition_rate(M, P, N),
        delta(M, P, N),
        region_corners(M, P, N),
        comb(M, P),
    )


def gap_surface(M_range: Iterable[int], P_range: Iterable[int], N_range: Iterable[int]) -> Iterator[tuple]:
    """Rows (M, P, N, lower, upper, gap) for every valid combination, lower in floating point."""
    Ps = list(P_range)
    Ns = list(N_range)
    for M in M_range:
        for P in Ps:
            if not 1 <= P <= M:
                continue
            for N in Ns:
                _, low = lower_bound(M, P, N)
                up = float(upper_bound(M, P, N))
                yield M, P, N, low, up, up - low


def max_gap(M_range: Iterable[int], P_range: Iterable[int], N_range: Iterable[int]) -> tuple[Fraction, tuple[int, int, int]]:
    """Largest exact gap on the grid and where it occurs."""
    best = (Fraction(-1), (0, 0, 0))
    Ps, Ns = list(P_range), list(N_range)
    for M in M_range:
        for P in Ps:
            if not 1 <= P <= M:
                continue
            for N in Ns:
                g = upper_bound(M, P, N) - lower_bound(M, P, N)[0]
                if g > best[0]:
                    best = (g, (M, P, N))
    return best


# Sweep grids: gap against N, rate against M, rate against N.
SWEEPS = {
    "gap": dict(M=range(2, 11), N=range(2, 21)),
    "rate-vs-M": dict(P=(5, 6, 10), N=2, M_max=60),
    "rate-vs-N": dict(MP=((5, 2), (10, 5), (20, 3)), N=range(2, 21)),
}


def sweep_rows(name: str) -> tuple[list[str], list[tuple]]:
    if name == "gap":
        g = SWEEPS["gap"]
        header = ["M", "P", "N", "lower", "upper", "gap"]
        return header, list(gap_surface(g["M"], range(1, max(g["M"]) + 1), g["N"]))
    if name == "rate-vs-M":
        g = SWEEPS["rate-vs-M"]
        rows = []
        for P in g["P"]:
            for M in range(P, g["M_max"] + 1):
                _, low = lower_bound(M, P, g["N"])
                rows.append((P, g["N"], M, low, float(upper_bound(M, P, g["N"]))))
        return ["P", "N", "M", "lower", "upper"], rows
    if name == "rate-vs-N":
        g = SWEEPS["rate-vs-N"]
        rows = []
        for M, P in g["MP"]:
            for N in g["N"]:
                _, low = lower_bound(M, P, N)
                rows.append((M, P, N, low, float(upper_bound(M, P, N))))
        return ["M", "P", "N", "lower", "upper"], rows
    raise KeyError(f"unknown sweep {name!r}; choose from {sorted(SWEEPS)}")


def rows_to_csv(header: list[str], rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()
