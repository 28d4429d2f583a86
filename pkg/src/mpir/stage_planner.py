"""Per-round stage counts for the multi-round scheme.

The counts come from a backward linear recurrence evaluated in exact
rationals. A closed form through the roots of ``N r^P = (r + 1)^P`` is kept
as an independent floating-point cross-check.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd

import numpy as np

from .errors import IllConditioned, NonIntegerStageCount


def _check(M: int, P: int, N: int) -> None:
    if not 1 <= P <= M:
        raise ValueError("need 1 <= P <= M")
    if N < 2:
        raise ValueError("need N >= 2")


def stage_recurrence(M: int, P: int, N: int) -> list[Fraction]:
    """Raw recurrence output: alpha_M = (N-1)^(M-P), alpha_k = sum_i C(P,i) alpha_(k+i) / (N-1)."""
    _check(M, P, N)
    a = [Fraction(0)] * (M + P + 1)
    a[M] = Fraction((N - 1) ** (M - P))
    for k in range(M - P, 0, -1):
        a[k] = sum(comb(P, i) * a[k + i] for i in range(1, P + 1)) / (N - 1)
    return a[1:M + 1]


@dataclass(frozen=True)
class StagePlan:
    """Stage counts plus the per-database totals they imply.

    ``scale`` is 1 unless ``N (D - U)`` is not divisible by ``P``; then every
    count is multiplied by the smallest factor giving an integral message
    length (the rates are unchanged because the recurrence is homogeneous).
    """

    M: int
    P: int
    N: int
    alpha: tuple[int, ...]
    scale: int = 1

    def rounds(self) -> range:
        return range(1, self.M + 1)

    def a(self, k: int) -> int:
        return self.alpha[k - 1] if 1 <= k <= self.M else 0

    @property
    def D_db(self) -> int:
        return sum(self.a(k) * comb(self.M, k) for k in self.rounds())

    @property
    def U_db(self) -> int:
        return sum(self.a(k) * comb(self.M - self.P, k) for k in self.rounds())

    @property
    def L(self) -> int:
        return self.N * (self.D_db - self.U_db) // self.P

    def demand(self, j: int) -> int:
        """Producer stages of round ``j`` one database consumes."""
        return sum(comb(self.P, k) * self.a(j + k) for k in range(1, self.P + 1))


def stage_counts(M: int, P: int, N: int, balanced: bool = True) -> StagePlan:
    raw = stage_recurrence(M, P, N)
    for k, v in enumerate(raw, 1):
        if v.denominator != 1:
            raise NonIntegerStageCount(f"alpha_{k} = {v} for (M,P,N)=({M},{P},{N})")
    alpha = tuple(int(v) for v in raw)
    plan = StagePlan(M, P, N, alpha)
    if balanced:
        total = N * (plan.D_db - plan.U_db)
        scale = P // gcd(P, total)
        if scale > 1:
            plan = StagePlan(M, P, N, tuple(scale * v for v in alpha), scale)
    return plan


def rational_rate(plan: StagePlan) -> Fraction:
    """(D - U) / D in lowest terms."""
    return Fraction(plan.D_db - plan.U_db, plan.D_db)


@dataclass(frozen=True)
class SpectralPlan:
    M: int
    P: int
    N: int
    unit_roots: tuple[complex, ...]
    roots: tuple[complex, ...]
    gamma: tuple[complex, ...]
    residual: float

    def y(self, n: int) -> complex:
        return sum(g * r ** n for g, r in zip(self.gamma, self.roots))

    def alpha(self, k: int) -> complex:
        return self.y(self.M - self.P - k)


def spectral_plan(M: int, P: int, N: int) -> SpectralPlan:
    """Roots of ``N r^P = (r+1)^P`` and the weights matching the initial conditions."""
    _check(M, P, N)
    t = [cmath.exp(2j * cmath.pi * k / P) for k in range(P)]
    root_n = N ** (1.0 / P)
    r = [tk / (root_n - tk) for tk in t]
    V = np.array([[rk ** (-P + row) for rk in r] for row in range(P)], dtype=complex)
    rhs = np.zeros(P, dtype=complex)
    rhs[0] = (N - 1) ** (M - P)
    gamma = np.linalg.solve(V, rhs)
    residual = float(np.linalg.norm(V @ gamma - rhs) / np.linalg.norm(rhs))
    if residual > 1e-8:
        raise IllConditioned(f"relative residual {residual:.3g} for (M,P,N)=({M},{P},{N})")
    return SpectralPlan(M, P, N, tuple(t), tuple(r), tuple(complex(g) for g in gamma), residual)


def spectral_totals(sp: SpectralPlan) -> tuple[complex, complex]:
    """Per-database download and undesired totals (D, U) from the closed form."""
    M, P = sp.M, sp.P
    D = U = 0j
    for g, r in zip(sp.gamma, sp.roots):
        w = g * r ** (M - P)
        D += w * ((1 + 1 / r) ** M - 1)
        U += w * ((1 + 1 / r) ** (M - P) - 1)
    return D, U


def spectral_rate(M: int, P: int, N: int) -> float:
    D, U = spectral_totals(spectral_plan(M, P, N))
    rate = (D - U) / D
    if abs(rate.imag) > 1e-9:
        raise IllConditioned(f"rate has imaginary part {rate.imag:.3g}")
    return rate.real
