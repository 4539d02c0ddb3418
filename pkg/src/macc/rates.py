"""Achievable rate, index-coding lower bound and their closed-form special cases.

All public functions return per-user ``RatePolynomial`` values with
normalization K; call ``.total()`` for the total rate.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import subsets
from .errors import CyclicRequiresKEqualsC, InvalidParams, WrongAccessDegree
from .indexcoding import build_E_sets
from .model import CacheSubsetTable, SystemParams
from .polynomial import RatePolynomial


class _NotApplicable:
    """Returned by ``closed_form_optimal`` outside the r = 1, r >= c-1 regime."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        return False

    def __repr__(self):
        return "NotApplicable"


NotApplicable = _NotApplicable()


@dataclass(frozen=True)
class SetFamilyA:
    """For each group i: P_i (power set of the caches outside C_i) and
    A_i = {C_i + P : no earlier C_j fits inside C_i + P}.

    P_i follows the repo-wide order (size, then decimal, both descending).
    A_i is listed largest first and, within one size, by ascending decimal.
    """

    c: int
    r: int
    power_sets: tuple[tuple[int, ...], ...]
    families: tuple[tuple[int, ...], ...]


def _check(table: CacheSubsetTable, params: SystemParams | None) -> None:
    if params is None:
        return
    if (params.c, params.r, params.K) != (table.c, table.r, table.K):
        raise InvalidParams(
            f"params (c={params.c}, r={params.r}, K={params.K}) do not match the table "
            f"(c={table.c}, r={table.r}, K={table.K})"
        )


def build_A_sets(table: CacheSubsetTable) -> SetFamilyA:
    everything = subsets.full(table.c)
    earlier: list[int] = []
    power_sets, families = [], []
    for e in table:
        P = tuple(subsets.power_set(everything & ~e.mask))
        A = tuple(sorted(
            (e.mask | p for p in P if not any(subsets.is_subset(prev, e.mask | p) for prev in earlier)),
            key=lambda m: (-subsets.size(m), m),
        ))
        power_sets.append(P)
        families.append(A)
        earlier.append(e.mask)
    return SetFamilyA(c=table.c, r=table.r, power_sets=tuple(power_sets), families=tuple(families))


def rate_per_user(table: CacheSubsetTable, params: SystemParams | None = None) -> RatePolynomial:
    """sum_i L_i sum_{A in A_i} gamma^(|A|-r) (1-gamma)^(c-|A|+r), over K."""
    _check(table, params)
    c, r = table.c, table.r
    coeffs: dict[tuple[int, int], int] = {}
    for e, family in zip(table, build_A_sets(table).families):
        for A in family:
            key = (subsets.size(A) - r, c - subsets.size(A) + r)
            coeffs[key] = coeffs.get(key, 0) + e.count
    return RatePolynomial(coeffs, table.K)


def lower_bound_per_user(table: CacheSubsetTable, params: SystemParams | None = None) -> RatePolynomial:
    """sum_i L_i sum_{E in E_i} gamma^|E| (1-gamma)^(c-|E|), over K."""
    _check(table, params)
    c = table.c
    coeffs: dict[tuple[int, int], int] = {}
    for e, family in zip(table, build_E_sets(table).families):
        for E in family:
            key = (subsets.size(E), c - subsets.size(E))
            coeffs[key] = coeffs.get(key, 0) + e.count
    return RatePolynomial(coeffs, table.K)


def shared_caching_rate(table: CacheSubsetTable, params: SystemParams | None = None) -> RatePolynomial:
    """Single-cache access: sum_i L_i (1-gamma)^i, over K."""
    _check(table, params)
    if table.r != 1:
        raise WrongAccessDegree(f"shared caching needs r = 1, got r = {table.r}")
    return RatePolynomial({(0, e.index): e.count for e in table}, table.K)


def cyclic_lower_bound(params: SystemParams) -> RatePolynomial:
    """[sum_{k=1}^{K-r} (1-gamma)^(k+r-1) + r (1-gamma)^K] / K for cyclic access."""
    K, r = params.K, params.r
    if K != params.c:
        raise CyclicRequiresKEqualsC(f"cyclic access needs K = c, got K={K}, c={params.c}")
    coeffs = {(0, k + r - 1): 1 for k in range(1, K - r + 1)}
    coeffs[(0, K)] = coeffs.get((0, K), 0) + r
    return RatePolynomial(coeffs, K)


def closed_form_optimal(table: CacheSubsetTable, params: SystemParams | None = None):
    """Optimal rate per user where the scheme is provably tight, else ``NotApplicable``.

    r = c:     L_1 (1-gamma)^c
    r = c - 1: L_1 (1-gamma)^(c-1) + sum_{i>=2} L_i (1-gamma)^c
    r = 1:     sum_i L_i (1-gamma)^i
    all over K.
    """
    _check(table, params)
    c, r, L = table.c, table.r, table.counts
    if r == c:
        return RatePolynomial({(0, c): L[0]}, table.K)
    if r == c - 1:
        coeffs = {(0, c - 1): L[0], (0, c): sum(L[1:])}
        return RatePolynomial(coeffs, table.K)
    if r == 1:
        return shared_caching_rate(table)
    return NotApplicable


@dataclass(frozen=True)
class GapRow:
    gamma: float
    rate: float
    lower_bound: float
    gap: float


def optimality_gap(table: CacheSubsetTable, params: SystemParams | None, gamma_grid) -> list[GapRow]:
    rate = rate_per_user(table, params)
    bound = lower_bound_per_user(table, params)
    rows = []
    for g in gamma_grid:
        if not 0 <= g <= 1:
            raise InvalidParams(f"gamma {g} outside [0, 1]")
        a, b = rate(g), bound(g)
        rows.append(GapRow(gamma=g, rate=a, lower_bound=b, gap=a - b))
    return rows
