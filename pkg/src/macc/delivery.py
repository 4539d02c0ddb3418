"""The XOR delivery scheme, a per-user decoder and the error-free-delivery check.

For every cache subset S with |S| >= r and every slot l up to the leader
count of S, the server sends the XOR over all groups i with C_i inside S
(and at least l users) of V^{u_i(l)}_{S minus C_i}: the bits of user
u_i(l)'s demanded file stored in exactly the caches S minus C_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

from . import subsets
from .errors import DecodingFailure, IncompleteDemandVector, SubsetTooSmall
from .model import CacheSubsetTable, DemandVector, SystemParams, User
from .polynomial import RatePolynomial


def _mask(S, c: int) -> int:
    return S if isinstance(S, int) else subsets.to_mask(S, c)


def leader_count(S, table: CacheSubsetTable) -> int:
    """Largest group population among r-subsets contained in S.

    ``S`` is a mask (int) or a collection of cache indices.
    """
    S = _mask(S, table.c)
    if subsets.size(S) < table.r:
        raise SubsetTooSmall(f"|S| = {subsets.size(S)} < r = {table.r}")
    return max((e.count for e in table if subsets.is_subset(e.mask, S)), default=0)


@dataclass(frozen=True, eq=False)
class Term:
    group: int
    user: User
    file: int
    subfile: int
    bits: object


@dataclass(frozen=True, eq=False)
class Transmission:
    subset: int
    slot: int
    terms: tuple[Term, ...]
    payload_length: object
    payload: object = field(repr=False)


@dataclass(frozen=True, eq=False)
class TransmissionLog:
    c: int
    r: int
    symbolic: bool
    transmissions: tuple[Transmission, ...]

    def __iter__(self):
        return iter(self.transmissions)

    def __len__(self):
        return len(self.transmissions)

    @cached_property
    def _by_key(self) -> dict[tuple[int, int], Transmission]:
        return {(t.subset, t.slot): t for t in self.transmissions}

    def lookup(self, subset: int, slot: int) -> Transmission | None:
        return self._by_key.get((subset, slot))

    def without(self, subset: int, slot: int) -> TransmissionLog:
        """Copy with one transmission removed (fault injection)."""
        kept = tuple(t for t in self.transmissions if (t.subset, t.slot) != (subset, slot))
        return replace(self, transmissions=kept)

    def total_length(self):
        """Total payload bits, or in symbolic mode the total in units of F."""
        if self.symbolic:
            return RatePolynomial.from_terms(t.payload_length for t in self.transmissions)
        return sum(t.payload_length for t in self.transmissions)

    def dumps(self) -> str:
        """One line per transmission: ``S  l  i:file:subfile,...  length`` (masks in hex).

        In symbolic mode the length ``a,b`` stands for gamma^a (1-gamma)^b F.
        """
        mode = "symbolic" if self.symbolic else "bits"
        lines = [f"# transmissions c={self.c} r={self.r} {mode}"]
        for t in self.transmissions:
            terms = ",".join(f"{x.group}:{x.file}:{x.subfile:x}" for x in t.terms)
            length = f"{t.payload_length[0]},{t.payload_length[1]}" if self.symbolic else str(t.payload_length)
            lines.append(f"{t.subset:x}\t{t.slot}\t{terms}\t{length}")
        return "\n".join(lines) + "\n"


def generate_transmissions(state, table: CacheSubsetTable, demands: DemandVector) -> TransmissionLog:
    """Run the delivery procedure against a sampled or symbolic prefetch state.

    Loop order: s = r..c, subsets of size s by descending decimal, then the
    slot l ascending.  Groups with fewer than l users contribute no term.
    """
    missing = [u for u in table.users() if u not in demands.demands]
    if missing:
        raise IncompleteDemandVector(f"no demand for users {missing}")
    c, r = table.c, table.r
    records = []
    for s in range(r, c + 1):
        for S in subsets.of_size(c, s):
            inside = [e for e in table if subsets.is_subset(e.mask, S)]
            lead = max((e.count for e in inside), default=0)
            for slot in range(1, lead + 1):
                terms = []
                for e in inside:
                    if e.count < slot:
                        continue
                    user = (e.index, slot)
                    file = demands[user]
                    sub = S & ~e.mask
                    terms.append(Term(e.index, user, file, sub, state.subfile(file, sub)))
                payload = state.encode(state.values(t.file, t.bits) for t in terms)
                if state.symbolic:
                    length = (s - r, c - s + r)
                else:
                    length = max((len(t.bits) for t in terms), default=0)
                records.append(Transmission(S, slot, tuple(terms), length, payload))
    return TransmissionLog(c=c, r=r, symbolic=state.symbolic, transmissions=tuple(records))


def _decode(log, state, table, demands, user):
    i, slot = user
    entry = table[i]
    file = demands[user]
    view = state.cache_view(entry.mask)
    pieces = [view.cached_positions(file)]
    failures = []
    missing = subsets.full(table.c) & ~entry.mask
    for d1 in subsets.subsets_of(missing):
        S = d1 | entry.mask
        tx = log.lookup(S, slot)
        if tx is None:
            failures.append(DecodingFailure(user, S, slot, None, "transmission missing"))
            continue
        own = next((t for t in tx.terms if t.group == i), None)
        if own is None or own.file != file or own.subfile != d1:
            failures.append(DecodingFailure(user, S, slot, own, "transmission lacks the user's term"))
            continue
        residual = tx.payload
        blocked = None
        for t in tx.terms:
            if t is own:
                continue
            if not view.covers(t.file, t.bits):
                blocked = t
                break
            residual = state.strip(residual, view.read(t.file, t.bits))
        if blocked is not None:
            failures.append(DecodingFailure(user, S, slot, blocked, "term not in side information"))
            continue
        if not state.matches(residual, file, own.bits):
            failures.append(DecodingFailure(user, S, slot, own, "decoded bits are wrong"))
            continue
        pieces.append(state.positions(own.bits))
    return state.collect(pieces), failures


def decode_user(log: TransmissionLog, state, table: CacheSubsetTable, demands: DemandVector, user: User):
    """Recover user ``(i, l)``'s demanded file from its caches and the payloads.

    Each missing piece V_{D1} (D1 disjoint from the user's caches) is read
    off the transmission for S = D1 + C_i at the user's slot after XOR-ing
    away every other term with cached content.  Returns the recovered bit
    positions (sampled state) or subfile masks (symbolic state); raises
    ``DecodingFailure`` on the first piece that cannot be recovered.
    """
    if user not in demands.demands:
        raise KeyError(f"unknown user {user}")
    recovered, failures = _decode(log, state, table, demands, user)
    if failures:
        raise failures[0]
    return recovered


@dataclass
class DeliveryReport:
    ok: bool
    per_user: dict
    failures: dict

    @property
    def failed_users(self) -> list[User]:
        return sorted(self.failures)


def verify_delivery(log: TransmissionLog, state, table: CacheSubsetTable, demands: DemandVector) -> DeliveryReport:
    per_user, failures = {}, {}
    for user in table.users():
        recovered, errs = _decode(log, state, table, demands, user)
        target = state.everything(demands[user])
        per_user[user] = len(recovered) / len(target)
        complete = len(recovered) == len(target)
        if errs or not complete:
            failures[user] = errs
    return DeliveryReport(ok=not failures, per_user=per_user, failures=failures)


def measured_rate_per_user(log: TransmissionLog, params: SystemParams):
    """Total payload over F*K; a RatePolynomial for symbolic logs."""
    if log.symbolic:
        return RatePolynomial(log.total_length().coefficients, params.K)
    return log.total_length() / (params.F * params.K)
