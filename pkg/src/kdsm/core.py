"""Data model for k-dimensional matching markets with cyclic preferences.

Agents come in k types arranged in a cycle. Each agent holds a strict,
possibly incomplete preference list over agents of the next type. A family
picks one agent of every type such that each member is acceptable to its
predecessor in the cycle; a matching is a set of agent-disjoint families.

This module owns the immutable data types, preference semantics, validation
diagnostics, and the canonical text formats for instances and matchings.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence


class KdsmError(Exception):
    """Base class for all library errors."""


class FormatError(KdsmError):
    """A text payload does not conform to the canonical file format."""


class TypeMismatchError(KdsmError):
    """An agent of the wrong type was passed to a preference query."""


class InvalidFamilyError(KdsmError):
    """A family is not valid for the instance it is used with."""


class DimensionError(KdsmError):
    """An instance has the wrong dimension for the requested operation."""


class SpaceTooLargeError(KdsmError):
    """A search space exceeds the configured exhaustive bound."""

    def __init__(self, message: str, bound: int, required: int):
        super().__init__(message)
        self.bound = bound
        self.required = required


class AgentRef(NamedTuple):
    """An agent identity: type index ``t`` in [0, k), agent index ``i`` in [0, n)."""

    t: int
    i: int


@dataclass(frozen=True)
class Instance:
    """A k-type cyclic market with ``n`` agent slots per type.

    ``prefs[t][i]`` is the strict preference list of agent (t, i) as a tuple
    of agent indices of type (t + 1) mod k. Lists may be incomplete; the
    complete special case has every list of length exactly n. Instances are
    immutable and safe to share between threads.
    """

    k: int
    n: int
    prefs: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"dimension k must be >= 2, got {self.k}")
        if self.n < 0:
            raise ValueError(f"identifier count n must be >= 0, got {self.n}")
        if len(self.prefs) != self.k or any(len(row) != self.n for row in self.prefs):
            raise ValueError("prefs must hold exactly k rows of n lists each")

    @staticmethod
    def build(k: int, prefs: Sequence[Sequence[Sequence[int]]]) -> "Instance":
        """Normalize raw per-type preference lists into an Instance.

        Types with fewer agents than the largest type are padded with
        empty-list agents, so the result always has equal counts per type.
        """
        if len(prefs) != k:
            raise ValueError(f"expected {k} preference rows, got {len(prefs)}")
        n = max((len(row) for row in prefs), default=0)
        rows = []
        for row in prefs:
            padded = [tuple(lst) for lst in row] + [()] * (n - len(row))
            rows.append(tuple(padded))
        return Instance(k, n, tuple(rows))

    def next_type(self, t: int) -> int:
        return (t + 1) % self.k

    def agents(self) -> Iterator[AgentRef]:
        """All agents in increasing (t, i) order."""
        for t in range(self.k):
            for i in range(self.n):
                yield AgentRef(t, i)

    def pref_list(self, a: AgentRef) -> tuple[int, ...]:
        return self.prefs[a.t][a.i]

    @cached_property
    def _ranks(self) -> tuple[tuple[dict[int, int], ...], ...]:
        # position index per agent so preference queries are O(1)
        return tuple(
            tuple({x: r for r, x in enumerate(lst)} for lst in row)
            for row in self.prefs
        )

    def rank_of(self, a: AgentRef, candidate: int) -> int | None:
        """Position of ``candidate`` in a's list, or None if absent."""
        return self._ranks[a.t][a.i].get(candidate)

    @cached_property
    def is_complete(self) -> bool:
        return all(len(lst) == self.n for row in self.prefs for lst in row)


@dataclass(frozen=True, order=True)
class Family:
    """A k-tuple of agent indices; ``members[t]`` is the type-t member."""

    members: tuple[int, ...]

    def agent(self, t: int) -> AgentRef:
        return AgentRef(t, self.members[t])


def family_violations(inst: Instance, f: Family) -> list[str]:
    """Diagnostics for why ``f`` is not a valid family of ``inst`` (empty if valid)."""
    out: list[str] = []
    if len(f.members) != inst.k:
        out.append(f"family has {len(f.members)} members, expected {inst.k}")
        return out
    for t, i in enumerate(f.members):
        if not 0 <= i < inst.n:
            out.append(f"member index {i} of type {t} out of range [0, {inst.n})")
    if out:
        return out
    for t in range(inst.k):
        succ = f.members[inst.next_type(t)]
        if inst.rank_of(f.agent(t), succ) is None:
            out.append(
                f"agent ({t}, {f.members[t]}) does not accept ({inst.next_type(t)}, {succ})"
            )
    return out


@dataclass(frozen=True)
class Matching:
    """An immutable set of agent-disjoint families with O(1) partner lookup.

    An agent that appears in no family is unmatched, and its partner is
    itself. Construct through :meth:`of`, which deduplicates and sorts
    families into canonical order (ascending type-0 index).
    """

    families: tuple[Family, ...]

    @staticmethod
    def of(families: Iterable[Family | Sequence[int]]) -> "Matching":
        fams = {
            f if isinstance(f, Family) else Family(tuple(f)) for f in families
        }
        return Matching(tuple(sorted(fams)))

    @cached_property
    def _partners(self) -> dict[AgentRef, AgentRef]:
        table: dict[AgentRef, AgentRef] = {}
        for f in self.families:
            k = len(f.members)
            for t in range(k):
                table[f.agent(t)] = f.agent((t + 1) % k)
        return table

    def partner(self, a: AgentRef) -> AgentRef:
        """The next-type member of a's family, or ``a`` itself if unmatched."""
        return self._partners.get(a, a)

    def is_matched(self, a: AgentRef) -> bool:
        return a in self._partners

    def __len__(self) -> int:
        return len(self.families)

    def __iter__(self) -> Iterator[Family]:
        return iter(self.families)

    def __contains__(self, f: Family) -> bool:
        return f in self.families


def partner(m: Matching, a: AgentRef) -> AgentRef:
    return m.partner(a)


def prefers(inst: Instance, a: AgentRef, b: AgentRef, c: AgentRef) -> bool:
    """True iff agent ``a`` strictly prefers ``b`` to ``c``.

    ``b`` must be of a's successor type. ``c`` is either of the successor
    type or equal to ``a`` itself, the encoding for "unmatched"; an agent
    never lists itself, so any listed ``b`` beats it. An unlisted ``b``
    never wins, and two unlisted candidates are incomparable.
    """
    nt = inst.next_type(a.t)
    if b.t != nt:
        raise TypeMismatchError(
            f"candidate {tuple(b)} is not of type {nt}, the successor type of {tuple(a)}"
        )
    if c != a and c.t != nt:
        raise TypeMismatchError(
            f"incumbent {tuple(c)} must be of type {nt} or the agent itself"
        )
    rb = inst.rank_of(a, b.i)
    if rb is None:
        return False
    if c == a:
        return True
    rc = inst.rank_of(a, c.i)
    return rc is None or rb < rc


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    complete: bool
    violations: tuple[str, ...]


def validate_instance(inst: Instance) -> ValidationReport:
    """Diagnose duplicate and out-of-range preference entries."""
    violations: list[str] = []
    for t in range(inst.k):
        for i in range(inst.n):
            lst = inst.prefs[t][i]
            seen = set()
            for x in lst:
                if not 0 <= x < inst.n:
                    violations.append(f"pref ({t}, {i}): entry {x} out of range [0, {inst.n})")
                if x in seen:
                    violations.append(f"pref ({t}, {i}): duplicate entry {x}")
                seen.add(x)
    return ValidationReport(not violations, inst.is_complete, tuple(violations))


@dataclass(frozen=True)
class MatchingReport:
    ok: bool
    violations: tuple[str, ...]


def validate_matching(inst: Instance, m: Matching) -> MatchingReport:
    """Check acceptability of every family and pairwise agent-disjointness."""
    violations: list[str] = []
    used: dict[AgentRef, Family] = {}
    for f in m:
        violations.extend(family_violations(inst, f))
        if len(f.members) != inst.k:
            continue
        for t in range(inst.k):
            a = f.agent(t)
            if a in used and used[a] != f:
                violations.append(f"agent ({a.t}, {a.i}) appears in two families")
            used[a] = f
    return MatchingReport(not violations, tuple(violations))


# Canonical text formats (line oriented, UTF-8, LF).
#
# Instance:   "KDSM 1" / "k <k>" / "n <n>" / one "pref <t> <i> : <entries>"
#             line per agent in increasing (t, i) order.
# Matching:   "KDSM-MATCHING 1" / "family <i0> ... <i(k-1)>" lines sorted by
#             the type-0 index.
# Omitted pref lines parse as empty lists; serialization always writes all
# k*n lines, so re-serialization is idempotent.

INSTANCE_HEADER = "KDSM 1"
MATCHING_HEADER = "KDSM-MATCHING 1"


def serialize_instance(inst: Instance) -> str:
    lines = [INSTANCE_HEADER, f"k {inst.k}", f"n {inst.n}"]
    for t in range(inst.k):
        for i in range(inst.n):
            entries = " ".join(str(x) for x in inst.prefs[t][i])
            lines.append(f"pref {t} {i} :" + (f" {entries}" if entries else ""))
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or lines[0].split() != INSTANCE_HEADER.split():
        raise FormatError(f"missing '{INSTANCE_HEADER}' header")
    try:
        knames, kval = lines[1].split()
        nnames, nval = lines[2].split()
    except (IndexError, ValueError) as exc:
        raise FormatError("expected 'k <k>' and 'n <n>' header lines") from exc
    if knames != "k" or nnames != "n":
        raise FormatError("expected 'k <k>' and 'n <n>' header lines")
    try:
        k, n = int(kval), int(nval)
    except ValueError as exc:
        raise FormatError("k and n must be integers") from exc
    if k < 2 or n < 0:
        raise FormatError(f"invalid dimensions k={k}, n={n}")
    table: dict[tuple[int, int], tuple[int, ...]] = {}
    last: tuple[int, int] | None = None
    for ln in lines[3:]:
        tokens = ln.split()
        if len(tokens) < 4 or tokens[0] != "pref" or tokens[3] != ":":
            raise FormatError(f"malformed pref line: {ln!r}")
        try:
            t, i = int(tokens[1]), int(tokens[2])
            entries = tuple(int(x) for x in tokens[4:])
        except ValueError as exc:
            raise FormatError(f"non-integer token in pref line: {ln!r}") from exc
        if not (0 <= t < k and 0 <= i < n):
            raise FormatError(f"pref line for unknown agent ({t}, {i})")
        if last is not None and (t, i) <= last:
            raise FormatError("pref lines must be in increasing (t, i) order")
        last = (t, i)
        table[(t, i)] = entries
    prefs = tuple(
        tuple(table.get((t, i), ()) for i in range(n)) for t in range(k)
    )
    return Instance(k, n, prefs)


def serialize_matching(m: Matching) -> str:
    lines = [MATCHING_HEADER]
    for f in m:
        lines.append("family " + " ".join(str(x) for x in f.members))
    return "\n".join(lines) + "\n"


def parse_matching(text: str) -> Matching:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or lines[0].split() != MATCHING_HEADER.split():
        raise FormatError(f"missing '{MATCHING_HEADER}' header")
    fams = []
    for ln in lines[1:]:
        tokens = ln.split()
        if tokens[0] != "family" or len(tokens) < 2:
            raise FormatError(f"malformed family line: {ln!r}")
        try:
            fams.append(Family(tuple(int(x) for x in tokens[1:])))
        except ValueError as exc:
            raise FormatError(f"non-integer token in family line: {ln!r}") from exc
    return Matching.of(fams)


def instance_digest(inst: Instance) -> str:
    """64-bit hash of the canonical serialization (blake2b, 8-byte digest, hex)."""
    return hashlib.blake2b(
        serialize_instance(inst).encode("utf-8"), digest_size=8
    ).hexdigest()
