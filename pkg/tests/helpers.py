"""Random instance generators and small independent oracles shared by the tests."""

from itertools import combinations
from math import comb

import numpy as np
import sympy

from macc import SystemParams, table_from_vector
from macc.model import DemandVector

g = sympy.Symbol("gamma")


def random_vector(rng, c, r, max_users=20, allow_zero=True):
    n = comb(c, r)
    lo = 0 if allow_zero else 1
    counts = rng.integers(lo, 4, size=n)
    if counts.sum() == 0:
        counts[0] = 1
    while counts.sum() > max_users:
        counts[np.argmax(counts)] -= 1
    return sorted((int(x) for x in counts), reverse=True)


def random_instance(rng, c=None, r=None, max_users=20, distinct=None, F=64):
    c = int(rng.integers(2, 7)) if c is None else c
    r = int(rng.integers(1, c + 1)) if r is None else r
    table = table_from_vector(random_vector(rng, c, r, max_users), c, r)
    K = table.K
    distinct = bool(rng.integers(0, 2)) if distinct is None else distinct
    N = K + int(rng.integers(0, 3)) if distinct else int(rng.integers(1, K + 2))
    M = sympy.Rational(int(rng.integers(0, 5)), 4) * N
    params = SystemParams(c=c, r=r, N=N, K=K, M=int(M) if M.q == 1 else f"{M.p}/{M.q}", F=F)
    demands = DemandVector.random(table, N, rng, distinct=distinct)
    return params, table, demands


def to_sympy(poly):
    """A RatePolynomial as a sympy expression in gamma."""
    expr = sum(coeff * g**a * (1 - g) ** b for (a, b), coeff in poly.coefficients.items())
    return sympy.Rational(1, poly.normalization) * expr


def same(expr_a, expr_b) -> bool:
    return sympy.expand(expr_a - expr_b) == 0


def all_subsets(items):
    items = list(items)
    for k in range(1, len(items) + 1):
        yield from combinations(items, k)
