"""Problem parameters, the canonical user-to-cache association table and demands.

Users are labelled ``(i, l)``: the l-th user attached to the i-th r-subset
of caches in canonical order (both 1-based).  ``CacheSubsetTable.users()``
flattens these row-major into the global order 1..K used for demand-vector
I/O.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from numbers import Rational

from . import subsets
from .errors import (
    CyclicRequiresKEqualsC,
    DuplicateSubset,
    IncompleteDemandVector,
    InvalidParams,
    InvalidSubset,
)

User = tuple[int, int]


def _as_number(value):
    """Exact Fraction for integers, rationals and "p/q" strings; float otherwise."""
    if isinstance(value, bool):
        raise InvalidParams(f"expected a number, got {value!r}")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as exc:
            raise InvalidParams(f"cannot parse number {value!r}") from exc
    value = float(value)
    if value.is_integer():
        return Fraction(int(value))
    return value


@dataclass(frozen=True)
class SystemParams:
    c: int
    r: int
    N: int
    K: int
    M: Fraction | float = Fraction(0)
    F: int = 1

    def __post_init__(self):
        for name in ("c", "r", "N", "K", "F"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidParams(f"{name} must be an integer, got {value!r}")
        object.__setattr__(self, "M", _as_number(self.M))
        if self.c < 1:
            raise InvalidParams(f"c must be positive, got {self.c}")
        if not 1 <= self.r <= self.c:
            raise InvalidParams(f"r must satisfy 1 <= r <= c={self.c}, got {self.r}")
        if self.N < 1:
            raise InvalidParams(f"N must be positive, got {self.N}")
        if self.K < 0:
            raise InvalidParams(f"K must be non-negative, got {self.K}")
        if self.F < 1:
            raise InvalidParams(f"F must be positive, got {self.F}")
        if not 0 <= self.M <= self.N:
            raise InvalidParams(f"M must lie in [0, N={self.N}], got {self.M}")

    @property
    def gamma(self) -> Fraction | float:
        return self.M / self.N

    @property
    def distinct_demands_valid(self) -> bool:
        return self.N >= self.K

    def with_(self, **changes) -> SystemParams:
        fields = dict(c=self.c, r=self.r, N=self.N, K=self.K, M=self.M, F=self.F)
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True)
class SubsetEntry:
    index: int
    members: tuple[int, ...]
    mask: int
    count: int

    @property
    def users(self) -> tuple[User, ...]:
        return tuple((self.index, l) for l in range(1, self.count + 1))


@dataclass(frozen=True)
class CacheSubsetTable:
    """All r-subsets of [c] in canonical order with their user counts."""

    c: int
    r: int
    entries: tuple[SubsetEntry, ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i: int) -> SubsetEntry:
        """Entry by its 1-based canonical index."""
        if not 1 <= i <= len(self.entries):
            raise IndexError(f"group index {i} outside [1, {len(self.entries)}]")
        return self.entries[i - 1]

    @property
    def K(self) -> int:
        return sum(e.count for e in self.entries)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(e.count for e in self.entries)

    def indicator(self, i: int) -> tuple[int, ...]:
        return tuple(int(b) for b in subsets.fmt_binary(self[i].mask, self.c))

    def users(self) -> list[User]:
        return [u for e in self.entries for u in e.users]

    def global_label(self, user: User) -> int:
        i, l = user
        if not 1 <= l <= self[i].count:
            raise KeyError(f"no user {user}")
        return sum(e.count for e in self.entries[: i - 1]) + l

    def user_at(self, k: int) -> User:
        for e in self.entries:
            if k <= e.count:
                return (e.index, k)
            k -= e.count
        raise KeyError(f"no user with global label beyond K={self.K}")

    def profile(self) -> dict[tuple[int, ...], int]:
        return {e.members: e.count for e in self.entries}


def _normalise_raw(raw, c: int, r: int) -> dict[int, int]:
    items = raw.items() if isinstance(raw, Mapping) else raw
    counts: dict[int, int] = {}
    for key, count in items:
        members = tuple(sorted(int(j) for j in key))
        if len(set(members)) != r or len(members) != r:
            raise InvalidSubset(f"subset {list(key)} does not have exactly r={r} distinct caches")
        mask = subsets.to_mask(members, c)
        if mask in counts:
            raise DuplicateSubset(f"subset {list(members)} given more than once")
        if isinstance(count, bool) or int(count) != count or count < 0:
            raise InvalidParams(f"count for subset {list(members)} must be a non-negative integer")
        counts[mask] = int(count)
    return counts


def _table(counts: dict[int, int], c: int, r: int) -> CacheSubsetTable:
    masks = subsets.of_size(c, r)
    ordered = sorted(masks, key=lambda m: (-counts.get(m, 0), -m))
    entries = tuple(
        SubsetEntry(index=i, members=subsets.from_mask(m, c), mask=m, count=counts.get(m, 0))
        for i, m in enumerate(ordered, start=1)
    )
    return CacheSubsetTable(c=c, r=r, entries=entries)


def canonicalize_profile(raw, params: SystemParams) -> CacheSubsetTable:
    """Order the r-subsets by user count (descending), ties by descending decimal.

    ``raw`` maps r-subsets (any iterable of cache indices) to user counts,
    either as a mapping or as an iterable of ``(subset, count)`` pairs.
    Subsets that are not mentioned get count 0.
    """
    table = _table(_normalise_raw(raw, params.c, params.r), params.c, params.r)
    if table.K != params.K:
        raise InvalidParams(f"profile attaches {table.K} users but K={params.K}")
    return table


def table_from_vector(vector: Iterable[int], c: int, r: int) -> CacheSubsetTable:
    """Table whose sorted profile vector is ``vector``.

    Counts are handed to the r-subsets in descending decimal order, which
    is exactly the order canonicalization produces among equal counts.
    """
    vector = [int(v) for v in vector]
    masks = subsets.of_size(c, r)
    if len(vector) > len(masks):
        raise InvalidParams(f"profile vector has {len(vector)} entries but C({c},{r}) = {len(masks)}")
    if any(v < 0 for v in vector):
        raise InvalidParams("profile counts must be non-negative")
    if any(a < b for a, b in zip(vector, vector[1:])):
        raise InvalidParams(f"profile vector {vector} is not non-increasing")
    return _table(dict(zip(masks, vector)), c, r)


def cyclic_profile(params: SystemParams) -> CacheSubsetTable:
    """Cyclic wrap-around access: user i reaches caches i, i+1, ..., i+r-1 (mod c).

    With r = c every window is the full set; the c users then all land on
    that single subset.
    """
    if params.K != params.c:
        raise CyclicRequiresKEqualsC(f"cyclic access needs K = c, got K={params.K}, c={params.c}")
    c, r = params.c, params.r
    counts: dict[int, int] = {}
    for i in range(c):
        window = subsets.to_mask([(i + k) % c + 1 for k in range(r)], c)
        counts[window] = counts.get(window, 0) + 1
    return _table(counts, c, r)


def uniform_profile(c: int, r: int, per_subset: int) -> CacheSubsetTable:
    return table_from_vector([per_subset] * comb(c, r), c, r)


@dataclass(frozen=True)
class DemandVector:
    """File index (1-based) demanded by every user."""

    demands: dict

    def __getitem__(self, user: User) -> int:
        return self.demands[user]

    def __len__(self):
        return len(self.demands)

    @property
    def is_distinct(self) -> bool:
        return len(set(self.demands.values())) == len(self.demands)

    def as_list(self, table: CacheSubsetTable) -> list[int]:
        return [self.demands[u] for u in table.users()]

    def validate(self, table: CacheSubsetTable, N: int, distinct: bool = False) -> None:
        missing = [u for u in table.users() if u not in self.demands]
        if missing:
            raise IncompleteDemandVector(f"no demand for users {missing}")
        extra = set(self.demands) - set(table.users())
        if extra:
            raise IncompleteDemandVector(f"demands given for unknown users {sorted(extra)}")
        bad = {u: d for u, d in self.demands.items() if not 1 <= d <= N}
        if bad:
            raise InvalidParams(f"demanded files outside [1, {N}]: {bad}")
        if distinct and not self.is_distinct:
            raise InvalidParams("distinct demands requested but some file is demanded twice")

    @classmethod
    def from_sequence(cls, table: CacheSubsetTable, files: Iterable[int]) -> DemandVector:
        files = [int(f) for f in files]
        users = table.users()
        if len(files) != len(users):
            raise IncompleteDemandVector(f"{len(files)} demands given for K={len(users)} users")
        return cls(dict(zip(users, files)))

    @classmethod
    def distinct(cls, table: CacheSubsetTable, N: int) -> DemandVector:
        """User k (global order) demands file k."""
        if table.K > N:
            raise InvalidParams(f"distinct demands need N >= K (N={N}, K={table.K})")
        return cls.from_sequence(table, range(1, table.K + 1))

    @classmethod
    def random(cls, table: CacheSubsetTable, N: int, rng, distinct: bool = False) -> DemandVector:
        K = table.K
        if distinct:
            if K > N:
                raise InvalidParams(f"distinct demands need N >= K (N={N}, K={K})")
            files = rng.permutation(N)[:K] + 1
        else:
            files = rng.integers(1, N + 1, size=K)
        return cls.from_sequence(table, files.tolist())
