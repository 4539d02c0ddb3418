"""The index coding instance behind a delivery phase and an explicit
generalized independent set for it.

Messages are the bits (file, position); every user contributes one
receiver per bit of its demanded file that its caches do not hold, with
the contents of its r caches as side information.  Receivers attached to
the same r-subset share side information, so side information is kept per
group rather than per receiver.

A set H of messages is generalized-independent when every non-empty
subset D of H contains a message whose receiver has no other member of D
in its side information.  ``construct_independent_set`` builds the set

    Y = union over groups i, slots l, and E in E_i of V^{u_i(l)}_E,

where E_i is the power set of the caches not covered by groups 1..i, and
``check_generalized_independence`` verifies it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import subsets
from .errors import InstanceMismatch, RequiresDistinctDemands
from .model import CacheSubsetTable, DemandVector
from .polynomial import RatePolynomial

EXHAUSTIVE_ATOM_LIMIT = 20
EXHAUSTIVE_BIT_LIMIT = 16
DEFAULT_SAMPLES = 10_000


@dataclass(frozen=True)
class SetFamilyE:
    c: int
    unions: tuple[int, ...]
    families: tuple[tuple[int, ...], ...]


def build_E_sets(table: CacheSubsetTable) -> SetFamilyE:
    covered = 0
    unions, families = [], []
    for e in table:
        covered |= e.mask
        unions.append(covered)
        families.append(tuple(subsets.power_set(subsets.full(table.c) & ~covered)))
    return SetFamilyE(c=table.c, unions=tuple(unions), families=tuple(families))


@dataclass(frozen=True)
class Receiver:
    group: int
    slot: int
    message: object


@dataclass(frozen=True, eq=False)
class IndexCodingInstance:
    state: object
    table: CacheSubsetTable
    demands: DemandVector

    @property
    def n_messages(self) -> int:
        p = self.state.params
        return p.N * p.F if not self.state.symbolic else p.N << p.c

    def side_info(self, z: int) -> np.ndarray:
        """Boolean (N, F) array of the bits stored in the caches of group z."""
        if self.state.symbolic:
            raise TypeError("bit-level side information needs a sampled prefetch state")
        return (self.state.masks & self.table[z].mask) != 0

    def in_side_info(self, message, z: int) -> bool:
        if self.state.symbolic:
            return bool(message.mask & self.table[z].mask)
        file, pos = message
        return bool(self.state.masks[file - 1, pos] & self.table[z].mask)

    def atom_in_side_info(self, atom: YAtom, z: int) -> bool:
        """Whether the subfile an atom is drawn from sits in group z's caches."""
        return bool(atom.subfile & self.table[z].mask)

    def receivers(self):
        """Receivers (group, slot, demanded message), group by group."""
        for e in self.table:
            for user in e.users:
                file = self.demands[user]
                if self.state.symbolic:
                    wanted = [
                        self.state.subfile(file, m) for m in range(1 << self.table.c) if not m & e.mask
                    ]
                else:
                    wanted = [(file, int(p)) for p in np.flatnonzero((self.state.masks[file - 1] & e.mask) == 0)]
                for message in wanted:
                    yield Receiver(e.index, user[1], message)

    @property
    def receiver_count(self) -> int:
        if self.state.symbolic:
            return sum(1 for _ in self.receivers())
        total = 0
        for e in self.table:
            for user in e.users:
                total += int(((self.state.masks[self.demands[user] - 1] & e.mask) == 0).sum())
        return total

    def demanders(self, message) -> list:
        """Users with a receiver demanding ``message``."""
        file = message.file if self.state.symbolic else message[0]
        return [
            u for u in self.table.users()
            if self.demands[u] == file and not self.in_side_info(message, u[0])
        ]


def build_instance(state, table: CacheSubsetTable, demands: DemandVector) -> IndexCodingInstance:
    demands.validate(table, state.params.N)
    return IndexCodingInstance(state=state, table=table, demands=demands)


@dataclass(frozen=True, eq=False)
class YAtom:
    """The bits V^{u_group(slot)}_S: demanded file ``file``, subfile mask ``subfile``."""

    group: int
    slot: int
    file: int
    subfile: int
    bits: object


@dataclass(frozen=True, eq=False)
class IndependentSet:
    state: object
    table: CacheSubsetTable
    demands: DemandVector
    atoms: tuple[YAtom, ...]

    def __len__(self):
        return len(self.atoms)

    def with_atom(self, atom: YAtom) -> IndependentSet:
        return replace(self, atoms=self.atoms + (atom,))

    def _bit_keys(self) -> np.ndarray:
        F = self.state.params.F
        keys = [(a.file - 1) * F + np.asarray(a.bits, dtype=np.int64) for a in self.atoms]
        return np.unique(np.concatenate(keys)) if keys else np.empty(0, dtype=np.int64)

    def bits(self) -> list[tuple[int, int]]:
        """Distinct (file, position) messages in Y (sampled states only)."""
        F = self.state.params.F
        return [(int(k) // F + 1, int(k) % F) for k in self._bit_keys()]

    def dumps(self) -> str:
        """One line per atom: ``i  l  S  file  size`` (S in hex).

        Symbolic sizes ``a,b`` stand for gamma^a (1-gamma)^b F.
        """
        lines = [f"# independent-set c={self.table.c} r={self.table.r}"]
        for a in self.atoms:
            size = self.state.size(a.bits)
            size = f"{size[0]},{size[1]}" if self.state.symbolic else str(size)
            lines.append(f"{a.group}\t{a.slot}\t{a.subfile:x}\t{a.file}\t{size}")
        return "\n".join(lines) + "\n"


def construct_independent_set(table: CacheSubsetTable, demands: DemandVector, state) -> IndependentSet:
    """Atoms ordered by group, then E in E_i (largest first), then slot."""
    if not demands.is_distinct:
        raise RequiresDistinctDemands("the independent set construction assumes distinct demands")
    families = build_E_sets(table).families
    atoms = []
    for e, family in zip(table, families):
        for S in family:
            for user in e.users:
                file = demands[user]
                atoms.append(YAtom(e.index, user[1], file, S, state.subfile(file, S)))
    return IndependentSet(state=state, table=table, demands=demands, atoms=tuple(atoms))


def _check_instance(Y: IndependentSet, instance: IndexCodingInstance) -> None:
    same_state = Y.state is instance.state or Y.state == instance.state
    if not (same_state and Y.table == instance.table and Y.demands == instance.demands):
        raise InstanceMismatch("independent set was built for a different instance")


def _atom_structure(Y: IndependentSet, instance: IndexCodingInstance):
    """Atoms sorted by group, a usable-witness flag and the conflict matrix.

    ``conflict[k, j]`` is True when atom j lies in the side information of
    the receivers of atom k.  Atom k can serve as a witness only if some
    receiver actually demands it: its file is the one its user asked for
    and the user's caches do not hold it.
    """
    atoms = sorted(Y.atoms, key=lambda a: a.group)
    m = len(atoms)
    conflict = np.zeros((m, m), dtype=bool)
    witness = np.zeros(m, dtype=bool)
    for k, a in enumerate(atoms):
        user = (a.group, a.slot)
        demanded = user in instance.demands.demands and instance.demands[user] == a.file
        witness[k] = demanded and not instance.atom_in_side_info(a, a.group)
        for j, b in enumerate(atoms):
            if j != k and instance.atom_in_side_info(b, a.group):
                conflict[k, j] = True
    return atoms, witness, conflict


def _atom_check_exhaustive(witness, conflict) -> bool:
    m = len(witness)
    if m == 0:
        return True
    weights = np.int64(1) << np.arange(m, dtype=np.int64)
    conflict_bits = (conflict.astype(np.int64) * weights).sum(axis=1)
    D = np.arange(1, 1 << m, dtype=np.int64)
    first = np.frexp((D & -D).astype(np.float64))[1] - 1
    return bool(np.all(witness[first] & ((D & conflict_bits[first]) == 0)))


def _atom_check_rows(witness, conflict, rows: np.ndarray) -> bool:
    rows = rows[rows.any(axis=1)]
    if len(rows) == 0:
        return True
    first = rows.argmax(axis=1)
    clash = (rows & conflict[first]).any(axis=1)
    return bool(np.all(witness[first] & ~clash))


def _targeted_rows(m: int) -> np.ndarray:
    """All singletons and pairs."""
    eye = np.eye(m, dtype=bool)
    i, j = np.triu_indices(m, k=1)
    return np.vstack([eye, eye[i] | eye[j]])


def _bit_check_exhaustive(Y: IndependentSet, instance: IndexCodingInstance) -> bool:
    """Literal definition over every non-empty subset of Y's bits."""
    bits = Y.bits()
    n = len(bits)
    if n == 0:
        return True
    weights = np.int64(1) << np.arange(n, dtype=np.int64)
    side = {z: np.array([instance.in_side_info(b, z) for b in bits]) for z in range(1, len(instance.table) + 1)}
    side_bits = {z: int((v.astype(np.int64) * weights).sum()) for z, v in side.items()}
    D = np.arange(1, 1 << n, dtype=np.int64)
    in_J = np.zeros(len(D), dtype=bool)
    for x, message in enumerate(bits):
        has_x = ((D >> x) & 1).astype(bool)
        for user in instance.demanders(message):
            in_J |= has_x & ((D & side_bits[user[0]]) == 0)
    return bool(in_J.all())


def check_generalized_independence(
    Y: IndependentSet,
    instance: IndexCodingInstance,
    mode: str = "auto",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> bool:
    """Verify that every subset of Y's atoms passes the witness test.

    ``mode`` is ``"exhaustive"`` (all 2^m - 1 atom subsets), ``"sampled"``
    (all singletons and pairs plus ``samples`` uniformly random subsets) or
    ``"auto"`` (exhaustive up to 20 atoms).  Sampled instances whose Y has
    at most 16 bits are additionally checked bit by bit against the
    definition itself.
    """
    _check_instance(Y, instance)
    atoms, witness, conflict = _atom_structure(Y, instance)
    m = len(atoms)
    if mode == "auto":
        mode = "exhaustive" if m <= EXHAUSTIVE_ATOM_LIMIT else "sampled"
    if mode == "exhaustive":
        if m > 30:
            raise ValueError(f"exhaustive check over {m} atoms is infeasible; use mode='sampled'")
        ok = _atom_check_exhaustive(witness, conflict)
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        ok = _atom_check_rows(witness, conflict, _targeted_rows(m)) and _atom_check_rows(
            witness, conflict, rng.random((samples, m)) < 0.5
        )
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if ok and not instance.state.symbolic and len(Y._bit_keys()) <= EXHAUSTIVE_BIT_LIMIT:
        ok = _bit_check_exhaustive(Y, instance)
    return ok


def alpha_count(Y: IndependentSet):
    """|Y| in bits, or for a symbolic Y the polynomial |Y| / F."""
    if Y.state.symbolic:
        return RatePolynomial.from_terms(Y.state.size(a.bits) for a in Y.atoms)
    return len(Y._bit_keys())
