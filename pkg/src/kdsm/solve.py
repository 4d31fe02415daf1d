"""Exhaustive and budgeted search for weakly stable matchings.

Enumeration is exact and desk-scale: it refuses to run when the number of
candidate families exceeds a configured bound. On complete instances the
enumeration restricts itself to perfect matchings, which is lossless
because a weakly stable matching of a complete instance never leaves an
agent unmatched (one unmatched agent per type would form a strongly
blocking family).

The budgeted solver is a backtracking search over per-type-0-agent
decisions (join a family or stay unmatched). A branch is abandoned as soon
as some family is strongly blocking with all k members' assignments
finalized; such a family can never be repaired deeper in the branch, and
the search backjumps to the shallowest level that could disturb it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from itertools import permutations
from typing import Iterator

from .core import Family, Instance, Matching, SpaceTooLargeError
from .verify import _first_blocker, _improvement_prefixes, find_blocking_naive

MAX_CANDIDATE_FAMILIES = 10**6
MAX_PERFECT_MATCHINGS = 10**8
# per-decision cap on incremental blocking detection work; purely an
# optimization knob, exhaustive leaves are always verified in full
PRUNE_WORK_CAP = 256


class SolveStatus(Enum):
    FOUND = "FOUND"
    EXHAUSTED_NONE = "EXHAUSTED-NONE"
    BUDGET_EXCEEDED = "BUDGET-EXCEEDED"


@dataclass(frozen=True)
class Budget:
    max_nodes: int | None = None
    max_seconds: float | None = None


@dataclass(frozen=True)
class SolveOutcome:
    status: SolveStatus
    matching: Matching | None
    nodes_explored: int
    elapsed: float


def count_candidate_families(inst: Instance) -> int:
    """Number of valid families, aborting early past the exhaustive bound."""
    if inst.is_complete:
        return inst.n**inst.k
    count = 0
    for _ in _candidate_families(inst):
        count += 1
        if count > MAX_CANDIDATE_FAMILIES:
            break
    return count


def _candidate_families(inst: Instance) -> Iterator[Family]:
    """All valid families in lexicographic member order."""
    k, n = inst.k, inst.n
    prefs = inst.prefs
    ranks = inst._ranks
    members = [0] * k
    accept = [[sorted(lst) for lst in prefs[t]] for t in range(k)]

    def extend(t: int) -> Iterator[Family]:
        if t == k:
            if members[0] in ranks[k - 1][members[k - 1]]:
                yield Family(tuple(members))
            return
        for j in accept[t - 1][members[t - 1]]:
            members[t] = j
            yield from extend(t + 1)

    for i0 in range(n):
        members[0] = i0
        yield from extend(1)


def _check_family_bound(inst: Instance, max_families: int) -> list[Family]:
    fams = []
    for f in _candidate_families(inst):
        fams.append(f)
        if len(fams) > max_families:
            raise SpaceTooLargeError(
                f"instance has more than {max_families} candidate families",
                bound=max_families,
                required=len(fams),
            )
    return fams


def _perfect_space(inst: Instance) -> int:
    return math.factorial(inst.n) ** (inst.k - 1)


def _zero_based_partner_rows(m: Matching, k: int, n: int) -> list[list[int]]:
    rows = [[-1] * n for _ in range(k)]
    for f in m:
        for t in range(k):
            rows[t][f.members[t]] = f.members[(t + 1) % k]
    return rows


def _rows_blocker(inst: Instance, rows: list[list[int]]) -> Family | None:
    """First blocker against a partner-array representation of a matching."""
    k, n = inst.k, inst.n
    prefixes: list[list[list[int]]] = []
    for t in range(k):
        out = []
        for i in range(n):
            p = rows[t][i]
            lst = inst.prefs[t][i]
            if p < 0:
                out.append(list(lst))
            else:
                r = inst._ranks[t][i].get(p)
                out.append(list(lst) if r is None else list(lst[:r]))
        prefixes.append(out)
    return _first_blocker(prefixes, k, n)


def _prepare_masks(inst: Instance) -> list[list[list[int]]]:
    """better[t][i][x] = bitmask of indices agent (t,i) prefers to x."""
    n = inst.n
    better = []
    for t in range(inst.k):
        row = []
        for i in range(n):
            masks = [0] * n
            acc = 0
            for x in inst.prefs[t][i]:
                masks[x] = acc
                acc |= 1 << x
            row.append(masks)
        better.append(row)
    return better


def _scan_complete_k3(inst: Instance, count_all: bool, cap: int | None = None) -> int:
    """Count weakly stable perfect matchings of a complete k=3 instance.

    Iterates all pairs of permutations (type-1 and type-2 assignments) and
    tests each with bitmask arithmetic: the matching is blocked iff some
    type-1 agent b has a preferred type-2 agent whose own preferred type-0
    set meets the set of type-0 agents that prefer b. With ``count_all``
    false the scan stops at the first stable matching.
    """
    n = inst.n
    if n == 0:
        return 1
    bet0, bet1, bet2 = _prepare_masks(inst)
    count = 0
    rng_n = range(n)
    for sigma in permutations(rng_n):
        wt = [0] * n  # wt[b] = mask of type-0 agents preferring b to sigma partner
        for a in rng_n:
            wm = bet0[a][sigma[a]]
            while wm:
                low = wm & (-wm)
                wt[low.bit_length() - 1] |= 1 << a
                wm ^= low
        sinv = [0] * n
        for a in rng_n:
            sinv[sigma[a]] = a
        for tau in permutations(rng_n):
            tinv = [0] * n
            for a in rng_n:
                tinv[tau[a]] = a
            blocked = False
            for b in rng_n:
                dm = bet1[b][tau[sinv[b]]]
                if not dm:
                    continue
                u = 0
                while dm:
                    low = dm & (-dm)
                    u |= bet2[low.bit_length() - 1][tinv[low.bit_length() - 1]]
                    dm ^= low
                if u & wt[b]:
                    blocked = True
                    break
            if not blocked:
                count += 1
                if not count_all or (cap is not None and count >= cap):
                    return count
    return count


def _enumerate_perfect(inst: Instance, limit: int | None) -> Iterator[Matching]:
    """Weakly stable perfect matchings in canonical order (complete instances)."""
    k, n = inst.k, inst.n
    if n == 0:
        yield Matching.of([])
        return
    rows = [[-1] * n for _ in range(k)]
    free = [set(range(n)) for _ in range(k)]
    chosen: list[tuple[int, ...]] = []

    def assign(i0: int) -> Iterator[Matching]:
        if i0 == n:
            if _rows_blocker(inst, rows) is None:
                yield Matching.of([Family(f) for f in chosen])
            return
        members = [0] * k
        members[0] = i0

        def pick(t: int) -> Iterator[Matching]:
            if t == k:
                fam = tuple(members)
                chosen.append(fam)
                for u in range(k):
                    rows[u][fam[u]] = fam[(u + 1) % k]
                yield from assign(i0 + 1)
                for u in range(k):
                    rows[u][fam[u]] = -1
                chosen.pop()
                return
            for j in sorted(free[t]):
                members[t] = j
                free[t].discard(j)
                yield from pick(t + 1)
                free[t].add(j)

        yield from pick(1)

    produced = 0
    for m in assign(0):
        yield m
        produced += 1
        if limit is not None and produced >= limit:
            return


def _enumerate_subsets(
    inst: Instance, fams: list[Family], limit: int | None
) -> Iterator[Matching]:
    """All weakly stable matchings, canonical order, via disjoint-subset search."""
    k, n = inst.k, inst.n
    rows = [[-1] * n for _ in range(k)]
    cur: list[Family] = []
    produced = 0

    def rec(start: int) -> Iterator[Matching]:
        nonlocal produced
        if _rows_blocker(inst, rows) is None:
            yield Matching.of(list(cur))
            produced += 1
        if limit is not None and produced >= limit:
            return
        for idx in range(start, len(fams)):
            f = fams[idx]
            if any(rows[t][f.members[t]] >= 0 for t in range(k)):
                continue
            cur.append(f)
            for t in range(k):
                rows[t][f.members[t]] = f.members[(t + 1) % k]
            yield from rec(idx + 1)
            for t in range(k):
                rows[t][f.members[t]] = -1
            cur.pop()
            if limit is not None and produced >= limit:
                return

    yield from rec(0)


def enumerate_weakly_stable(
    inst: Instance,
    limit: int | None = None,
    max_families: int = MAX_CANDIDATE_FAMILIES,
) -> list[Matching]:
    """All weakly stable matchings of ``inst`` (up to ``limit``), canonical order.

    Raises SpaceTooLargeError when the candidate-family space (or, for
    complete instances, the perfect-matching space) exceeds the configured
    bound.
    """
    if inst.is_complete and inst.n >= 1:
        nfam = inst.n**inst.k
        if nfam > max_families:
            raise SpaceTooLargeError(
                f"{nfam} candidate families exceed the bound {max_families}",
                bound=max_families,
                required=nfam,
            )
        space = _perfect_space(inst)
        if space > MAX_PERFECT_MATCHINGS:
            raise SpaceTooLargeError(
                f"{space} perfect matchings exceed the bound {MAX_PERFECT_MATCHINGS}",
                bound=MAX_PERFECT_MATCHINGS,
                required=space,
            )
        return list(_enumerate_perfect(inst, limit))
    fams = _check_family_bound(inst, max_families)
    return list(_enumerate_subsets(inst, fams, limit))


def count_matchings(
    inst: Instance, max_families: int = MAX_CANDIDATE_FAMILIES
) -> int:
    """Total number of matchings (all agent-disjoint family subsets)."""
    fams = _check_family_bound(inst, max_families)
    k, n = inst.k, inst.n
    used = [[False] * n for _ in range(k)]
    count = 0

    def rec(start: int) -> None:
        nonlocal count
        count += 1
        for idx in range(start, len(fams)):
            f = fams[idx]
            if any(used[t][f.members[t]] for t in range(k)):
                continue
            for t in range(k):
                used[t][f.members[t]] = True
            rec(idx + 1)
            for t in range(k):
                used[t][f.members[t]] = False

    rec(0)
    return count


def count_weakly_stable(
    inst: Instance, max_families: int = MAX_CANDIDATE_FAMILIES
) -> int:
    """Exact number of weakly stable matchings."""
    if inst.is_complete and inst.n >= 1 and inst.k == 3:
        nfam = inst.n**inst.k
        if nfam > max_families:
            raise SpaceTooLargeError(
                f"{nfam} candidate families exceed the bound {max_families}",
                bound=max_families,
                required=nfam,
            )
        space = _perfect_space(inst)
        if space > MAX_PERFECT_MATCHINGS:
            raise SpaceTooLargeError(
                f"{space} perfect matchings exceed the bound {MAX_PERFECT_MATCHINGS}",
                bound=MAX_PERFECT_MATCHINGS,
                required=space,
            )
        return _scan_complete_k3(inst, count_all=True)
    return len(enumerate_weakly_stable(inst, max_families=max_families))


def find_weakly_stable(inst: Instance, budget: Budget | None = None) -> SolveOutcome:
    """Search for one weakly stable matching under a node/time budget.

    Type-0 agents are processed in index order; each either anchors a new
    family (partner tuples tried in lexicographic order) or stays
    unmatched (tried last). A node is a committed decision. FOUND carries
    a matching re-certified by the verifier; EXHAUSTED-NONE certifies that
    the whole decision tree was covered. Node counts are deterministic.
    """
    t_start = time.perf_counter()
    budget = budget or Budget()
    k, n = inst.k, inst.n
    prefs = inst.prefs
    ranks = inst._ranks
    deadline = (
        t_start + budget.max_seconds if budget.max_seconds is not None else None
    )
    max_nodes = budget.max_nodes

    if n == 0:
        return SolveOutcome(
            SolveStatus.FOUND, Matching.of([]), 0, time.perf_counter() - t_start
        )

    rows = [[-1] * n for _ in range(k)]  # partner index or -1
    level_of = [[-1] * n for _ in range(k)]  # decision level that matched the agent
    decided = 0  # type-0 agents with a final decision
    accept = [[sorted(lst) for lst in prefs[t]] for t in range(k)]
    chosen: list[tuple[int, ...] | None] = [None] * n
    nodes = 0
    out_of_budget = False

    def finalized(t: int, i: int) -> bool:
        return rows[t][i] >= 0 or (t == 0 and i < decided)

    def improvement(t: int, i: int) -> tuple[int, ...]:
        p = rows[t][i]
        lst = prefs[t][i]
        if p < 0:
            return lst
        r = ranks[t][i].get(p)
        return lst if r is None else lst[:r]

    def blocker_level(f: tuple[int, ...]) -> int:
        lvl = 0
        for t in range(k):
            i = f[t]
            if rows[t][i] >= 0:
                lvl = max(lvl, level_of[t][i])
            elif t == 0:
                lvl = max(lvl, i)
            else:
                lvl = max(lvl, n - 1)
        return lvl

    def anchored_blocker(t0: int, i0: int) -> tuple[int, ...] | None:
        """A blocking family through (t0, i0) among finalized agents, capped."""
        work = PRUNE_WORK_CAP
        path = [0] * k

        def walk(step: int, t: int, i: int) -> bool:
            nonlocal work
            path[t] = i
            if step == k:
                return i == i0 and t == t0
            nt = (t + 1) % k
            for j in improvement(t, i):
                work -= 1
                if work <= 0:
                    return False
                if step == k - 1:
                    if j == i0:
                        path[nt] = j
                        # closing step lands on the anchor itself
                        return walk(step + 1, nt, j)
                    continue
                if finalized(nt, j) and walk(step + 1, nt, j):
                    return True
            return False

        if walk(0, t0, i0):
            # path is indexed by type; the walk filled every type once
            return tuple(path)
        return None

    def check_new(members: list[tuple[int, int]]) -> tuple[int, ...] | None:
        for t, i in members:
            b = anchored_blocker(t, i)
            if b is not None:
                return b
        return None

    class _Stop(Exception):
        pass

    def spend_node() -> None:
        nonlocal nodes, out_of_budget
        nodes += 1
        if max_nodes is not None and nodes >= max_nodes:
            out_of_budget = True
            raise _Stop
        if deadline is not None and (nodes & 0x3FF) == 0:
            if time.perf_counter() > deadline:
                out_of_budget = True
                raise _Stop

    found: list[Matching] = []

    def search(d: int) -> int | None:
        """Explore decisions for type-0 agent d; return a backjump level or None."""
        nonlocal decided
        if d == n:
            blk = _rows_blocker(inst, rows)
            if blk is None:
                found.append(
                    Matching.of([Family(f) for f in chosen if f is not None])
                )
                raise _Stop
            return blocker_level(blk.members)

        members = [0] * k
        members[0] = d

        def commit(fam: tuple[int, ...]) -> int | None:
            # returns a backjump level strictly below d, or None to continue
            nonlocal decided
            spend_node()
            for t in range(k):
                rows[t][fam[t]] = fam[(t + 1) % k]
                level_of[t][fam[t]] = d
            chosen[d] = fam
            decided = d + 1
            blk = check_new([(t, fam[t]) for t in range(k)])
            if blk is not None:
                jump = blocker_level(blk)  # always <= d: members are finalized
            else:
                jump = search(d + 1)
            decided = d
            chosen[d] = None
            for t in range(k):
                rows[t][fam[t]] = -1
                level_of[t][fam[t]] = -1
            return jump if jump is not None and jump < d else None

        def pick(t: int) -> int | None:
            if t == k:
                if ranks[k - 1][members[k - 1]].get(members[0]) is None:
                    return None
                return commit(tuple(members))
            for j in accept[t - 1][members[t - 1]]:
                if rows[t][j] >= 0:
                    continue
                members[t] = j
                jump = pick(t + 1)
                if jump is not None and jump < d:
                    return jump
            return None

        jump = pick(1)
        if jump is not None and jump < d:
            return jump

        # the unmatched decision, tried last
        spend_node()
        decided = d + 1
        blk = anchored_blocker(0, d)
        if blk is not None:
            jump = blocker_level(blk)
        else:
            jump = search(d + 1)
        decided = d
        return jump if jump is not None and jump < d else None

    try:
        search(0)
        status = SolveStatus.EXHAUSTED_NONE
    except _Stop:
        status = SolveStatus.BUDGET_EXCEEDED if out_of_budget else SolveStatus.FOUND

    elapsed = time.perf_counter() - t_start
    if found:
        m = found[0]
        assert find_blocking_naive(inst, m) is None
        return SolveOutcome(SolveStatus.FOUND, m, nodes, elapsed)
    return SolveOutcome(status, None, nodes, elapsed)
