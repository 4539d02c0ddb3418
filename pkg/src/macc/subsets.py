"""Cache-subset bitmasks.

A subset S of the caches [c] = {1, ..., c} is encoded as an integer whose
binary expansion, read as a length-c vector, has cache 1 in the most
significant position.  So for c = 4, {1, 2} -> 0b1100 = 12 and
{3, 4} -> 0b0011 = 3.  "Descending decimal" order throughout the package
means descending value of this integer.
"""

from itertools import combinations
from typing import Iterable, Iterator

from .errors import InvalidSubset


def to_mask(members: Iterable[int], c: int) -> int:
    mask = 0
    for j in members:
        j = int(j)
        if not 1 <= j <= c:
            raise InvalidSubset(f"cache index {j} outside [1, {c}]")
        mask |= 1 << (c - j)
    return mask


def from_mask(mask: int, c: int) -> tuple[int, ...]:
    """Sorted cache indices contained in ``mask``."""
    return tuple(j for j in range(1, c + 1) if mask >> (c - j) & 1)


def size(mask: int) -> int:
    return mask.bit_count()


def full(c: int) -> int:
    return (1 << c) - 1


def is_subset(a: int, b: int) -> bool:
    return a & ~b == 0


def of_size(c: int, s: int) -> list[int]:
    """All s-subsets of [c], in descending decimal order."""
    return sorted((to_mask(comb, c) for comb in combinations(range(1, c + 1), s)), reverse=True)


def subsets_of(mask: int) -> Iterator[int]:
    """Every submask of ``mask`` (including 0 and ``mask`` itself)."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def power_set(mask: int) -> list[int]:
    """Submasks of ``mask`` ordered by size (largest first), then descending decimal.

    >>> [bin(m) for m in power_set(0b0011)]
    ['0b11', '0b10', '0b1', '0b0']
    """
    return sorted(subsets_of(mask), key=lambda m: (-m.bit_count(), -m))


def fmt(mask: int, c: int) -> str:
    """Human-readable form, e.g. ``{1,3}``; the empty set prints as ``{}``."""
    return "{" + ",".join(str(j) for j in from_mask(mask, c)) + "}"


def fmt_binary(mask: int, c: int) -> str:
    return format(mask, f"0{c}b") if c else ""
