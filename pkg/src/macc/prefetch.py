"""Decentralized random prefetching at bit granularity.

Every (file, bit, cache) triple gets an independent Bernoulli(gamma) draw
that decides whether the cache stores that bit.  Draws come from a
counter-based generator (a SplitMix64 finaliser applied to the packed
triple, keyed by the seed), so any single assignment can be recomputed
without replaying a stream.  ``gamma`` is turned into a 64-bit fixed-point
threshold so seeded results do not depend on float rounding.

Two state flavours share one duck-typed interface used by the delivery
and index-coding modules:

* ``PrefetchState`` - sampled, each subfile is an array of bit positions.
* ``SymbolicState`` - each subfile is a label ``Atom(file, mask)`` whose
  size is the expected ``gamma^|S| (1-gamma)^(c-|S|) F``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import subsets
from .model import SystemParams

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MUL1 = _U64(0xBF58476D1CE4E5B9)
_MUL2 = _U64(0x94D049BB133111EB)
_VALUE_KEY = 0x5EED_B175_0F_F11E5

_MAX_FILES = 1 << 24
_MAX_BITS = 1 << 32
_MAX_CACHES = 1 << 8


def _mix(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = x + _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MUL1
    z = (z ^ (z >> _U64(27))) * _MUL2
    return z ^ (z >> _U64(31))


def _counter(file_idx: int, bits: np.ndarray, slot: int) -> np.ndarray:
    return (_U64(file_idx) << _U64(40)) | (bits.astype(np.uint64) << _U64(8)) | _U64(slot)


def _seed_key(seed: int) -> np.uint64:
    return _mix(np.array([seed & 0xFFFF_FFFF_FFFF_FFFF], dtype=np.uint64))[0]


def fixed_point_threshold(gamma) -> int | None:
    """floor(gamma * 2^64); None stands for "always" (gamma >= 1)."""
    g = Fraction(gamma)
    if g >= 1:
        return None
    if g <= 0:
        return 0
    return (g.numerator << 64) // g.denominator


def bit_values(file: int, positions: np.ndarray) -> np.ndarray:
    """Content of bits of file ``file`` (1-based); depends only on (file, position)."""
    positions = np.asarray(positions)
    z = _mix(_counter(file, positions, 0xFF) ^ _U64(_VALUE_KEY))
    return (z & _U64(1)).astype(np.uint8)


def expected_subfile_fraction(S, params: SystemParams):
    """Expected |W^i_S| / F, i.e. gamma^|S| (1-gamma)^(c-|S|); S is a mask or cache indices."""
    k = subsets.size(S if isinstance(S, int) else subsets.to_mask(S, params.c))
    g = params.gamma
    return g**k * (1 - g) ** (params.c - k)


def _masks_for(params: SystemParams, seed: int, file_idx: int, positions: np.ndarray) -> np.ndarray:
    """Subset masks of the given bit positions of file ``file_idx`` (0-based)."""
    c = params.c
    threshold = fixed_point_threshold(params.gamma)
    key = _seed_key(seed)
    positions = np.asarray(positions, dtype=np.uint64)
    out = np.zeros(len(positions), dtype=np.int64)
    if threshold == 0:
        return out
    for j in range(1, c + 1):
        if threshold is None:
            cached = np.ones(len(positions), dtype=bool)
        else:
            cached = _mix(_counter(file_idx, positions, j - 1) ^ key) < _U64(threshold)
        out |= cached.astype(np.int64) << (c - j)
    return out


def _sample_masks(params: SystemParams, seed: int) -> np.ndarray:
    if params.N >= _MAX_FILES or params.F >= _MAX_BITS or params.c >= _MAX_CACHES:
        raise ValueError("instance too large for the 64-bit draw counter")
    positions = np.arange(params.F, dtype=np.uint64)
    masks = np.stack([_masks_for(params, seed, f, positions) for f in range(params.N)])
    masks.flags.writeable = False
    return masks


def bit_membership(params: SystemParams, seed: int, file: int, bit: int) -> int:
    """Cache-subset mask of one bit, recomputed without sampling the whole state."""
    return int(_masks_for(params, seed, file - 1, np.array([bit]))[0])


def decentralized_prefetch(params: SystemParams, seed: int) -> PrefetchState:
    return PrefetchState(params=params, seed=int(seed), masks=_sample_masks(params, int(seed)))


def _rle(positions: np.ndarray) -> str:
    if len(positions) == 0:
        return ""
    breaks = np.flatnonzero(np.diff(positions) != 1)
    starts = np.concatenate(([positions[0]], positions[breaks + 1]))
    ends = np.concatenate((positions[breaks], [positions[-1]]))
    return ",".join(str(a) if a == b else f"{a}-{b}" for a, b in zip(starts, ends))


def _unrle(text: str) -> list[int]:
    out = []
    for run in filter(None, text.split(",")):
        a, _, b = run.partition("-")
        out.extend(range(int(a), int(b or a) + 1))
    return out


@dataclass(frozen=True, eq=False)
class PrefetchState:
    """Sampled cache contents.

    ``masks[f - 1, b]`` is the subset mask of caches holding bit ``b`` of
    file ``f``; bit b therefore lies in subfile ``W^f_S`` with S that mask.
    """

    params: SystemParams
    seed: int
    masks: np.ndarray

    symbolic = False

    @property
    def c(self) -> int:
        return self.params.c

    @property
    def F(self) -> int:
        return self.params.F

    @cached_property
    def _index(self) -> list[dict[int, np.ndarray]]:
        index = []
        for row in self.masks:
            order = np.argsort(row, kind="stable")
            keys, starts = np.unique(row[order], return_index=True)
            groups = np.split(order, starts[1:])
            index.append({int(k): g for k, g in zip(keys, groups)})
        return index

    @property
    def partitions(self) -> dict[int, dict[int, np.ndarray]]:
        """file -> {subset mask -> sorted bit positions}, non-empty subfiles only."""
        return {f: dict(part) for f, part in enumerate(self._index, start=1)}

    def subfile(self, file: int, mask: int) -> np.ndarray:
        return self._index[file - 1].get(mask, np.empty(0, dtype=np.int64))

    def size(self, vset) -> int:
        return len(vset)

    def positions(self, vset) -> np.ndarray:
        return vset

    def everything(self, file: int) -> np.ndarray:
        return np.arange(self.F)

    def collect(self, pieces) -> np.ndarray:
        pieces = list(pieces)
        if not pieces:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(pieces))

    def values(self, file: int, vset) -> np.ndarray:
        return bit_values(file, vset)

    def encode(self, values) -> np.ndarray:
        """XOR of bit strings, each zero-padded to the longest."""
        values = list(values)
        out = np.zeros(max((len(v) for v in values), default=0), dtype=np.uint8)
        for v in values:
            out[: len(v)] ^= v
        return out

    def strip(self, payload, value) -> np.ndarray:
        return self.encode([payload, value])

    def matches(self, residual, file: int, vset) -> bool:
        n = len(vset)
        if len(residual) < n or residual[n:].any():
            return False
        return bool(np.array_equal(residual[:n], self.values(file, vset)))

    def cache_view(self, user_mask: int) -> BitCacheView:
        return BitCacheView(self, user_mask)

    def bits_in_cache(self, j: int) -> int:
        """Number of bits (over all files) stored in cache j."""
        return int(((self.masks >> (self.c - j)) & 1).sum())

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.masks).tobytes()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, PrefetchState):
            return NotImplemented
        return (
            self.params == other.params
            and self.seed == other.seed
            and np.array_equal(self.masks, other.masks)
        )

    __hash__ = None

    def dumps(self) -> str:
        p = self.params
        lines = [f"# prefetch c={p.c} r={p.r} N={p.N} K={p.K} M={p.M} F={p.F} seed={self.seed}"]
        for f, part in enumerate(self._index, start=1):
            for mask in sorted(part):
                lines.append(f"{f} {mask:x} {_rle(part[mask])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> PrefetchState:
        header, *rows = [ln for ln in text.splitlines() if ln.strip()]
        fields = dict(kv.split("=", 1) for kv in header.lstrip("# ").split()[1:])
        M = fields["M"]
        params = SystemParams(
            c=int(fields["c"]), r=int(fields["r"]), N=int(fields["N"]), K=int(fields["K"]),
            M=M if "/" in M or M.isdigit() else float(M), F=int(fields["F"]),
        )
        masks = np.full((params.N, params.F), -1, dtype=np.int64)
        for row in rows:
            f, mask, runs = (row.split(" ", 2) + [""])[:3]
            masks[int(f) - 1, _unrle(runs)] = int(mask, 16)
        if (masks < 0).any():
            raise ValueError("serialized prefetch state does not cover every bit")
        masks.flags.writeable = False
        return cls(params=params, seed=int(fields["seed"]), masks=masks)


class BitCacheView:
    """What a user attached to caches ``user_mask`` can read."""

    def __init__(self, state: PrefetchState, user_mask: int):
        self.state = state
        self.user_mask = user_mask

    def cached_positions(self, file: int) -> np.ndarray:
        return np.flatnonzero(self.state.masks[file - 1] & self.user_mask)

    def covers(self, file: int, vset) -> bool:
        return bool((self.state.masks[file - 1, vset] & self.user_mask).all())

    def read(self, file: int, vset) -> np.ndarray:
        if not self.covers(file, vset):
            raise KeyError(f"bits of file {file} not in caches 0x{self.user_mask:x}")
        return bit_values(file, vset)


@dataclass(frozen=True, order=True)
class Atom:
    """Symbolic subfile W^file_S (S given as a mask)."""

    file: int
    mask: int


@dataclass(frozen=True)
class SymbolicState:
    """Expected-size prefetching: subfiles are labels, sizes are monomials.

    ``size`` returns the exponent pair ``(a, b)`` of gamma^a (1-gamma)^b,
    the expected subfile size in units of F.
    """

    params: SystemParams

    symbolic = True
    seed = None

    @property
    def c(self) -> int:
        return self.params.c

    def subfile(self, file: int, mask: int) -> Atom:
        return Atom(file, mask)

    def size(self, atom: Atom) -> tuple[int, int]:
        k = subsets.size(atom.mask)
        return (k, self.c - k)

    def positions(self, atom: Atom) -> frozenset:
        return frozenset({atom.mask})

    def everything(self, file: int) -> frozenset:
        return frozenset(range(1 << self.c))

    def collect(self, pieces) -> frozenset:
        return frozenset().union(*pieces)

    def values(self, file: int, atom: Atom) -> frozenset:
        return frozenset({atom})

    def encode(self, values) -> frozenset:
        out = frozenset()
        for v in values:
            out = out ^ v
        return out

    def strip(self, payload, value) -> frozenset:
        return payload ^ value

    def matches(self, residual, file: int, atom: Atom) -> bool:
        return residual == frozenset({atom})

    def cache_view(self, user_mask: int) -> SymbolicCacheView:
        return SymbolicCacheView(self, user_mask)


class SymbolicCacheView:
    def __init__(self, state: SymbolicState, user_mask: int):
        self.state = state
        self.user_mask = user_mask

    def cached_positions(self, file: int) -> frozenset:
        return frozenset(m for m in range(1 << self.state.c) if m & self.user_mask)

    def covers(self, file: int, atom: Atom) -> bool:
        return bool(atom.mask & self.user_mask)

    def read(self, file: int, atom: Atom) -> frozenset:
        if not self.covers(file, atom):
            raise KeyError(f"{atom} not in caches 0x{self.user_mask:x}")
        return frozenset({atom})
