"""Shared fixtures and independent brute-force oracles.

The oracle helpers below deliberately avoid the library's verification and
search code paths: they read raw preference tuples and use linear list
scans, so they can serve as ground truth for the optimized implementations.
"""

from __future__ import annotations

import itertools
from pathlib import Path

import pytest

from kdsm import Instance, Matching

DATA = Path(__file__).parent / "data"


def oracle_prefers(prefs, t, i, cand, incumbent) -> bool:
    """Raw list-scan preference test; incumbent None means unmatched."""
    lst = prefs[t][i]
    if cand not in lst:
        return False
    if incumbent is None or incumbent not in lst:
        return True
    return lst.index(cand) < lst.index(incumbent)


def oracle_families(inst: Instance) -> list[tuple[int, ...]]:
    """Every valid family by direct product scan."""
    k, n = inst.k, inst.n
    out = []
    for combo in itertools.product(range(n), repeat=k):
        if all(combo[(t + 1) % k] in inst.prefs[t][combo[t]] for t in range(k)):
            out.append(combo)
    return out


def oracle_partner_table(inst: Instance, families) -> list[list[int | None]]:
    table: list[list[int | None]] = [[None] * inst.n for _ in range(inst.k)]
    for fam in families:
        for t in range(inst.k):
            table[t][fam[t]] = fam[(t + 1) % inst.k]
    return table


def oracle_blockers(inst: Instance, matching_families) -> list[tuple[int, ...]]:
    """All strongly blocking families, by scanning every candidate family."""
    table = oracle_partner_table(inst, matching_families)
    out = []
    for fam in oracle_families(inst):
        if all(
            oracle_prefers(
                inst.prefs, t, fam[t], fam[(t + 1) % inst.k], table[t][fam[t]]
            )
            for t in range(inst.k)
        ):
            out.append(fam)
    return out


def oracle_is_stable(inst: Instance, matching_families) -> bool:
    return not oracle_blockers(inst, matching_families)


def oracle_all_matchings(inst: Instance) -> list[tuple[tuple[int, ...], ...]]:
    """Every matching, enumerated by filtering family combinations.

    Uses itertools.combinations over the family list (not the library's
    subset search) so small spaces can be cross-checked structurally.
    """
    fams = oracle_families(inst)
    out = []
    for size in range(len(fams) + 1):
        for combo in itertools.combinations(fams, size):
            disjoint = all(
                a[t] != b[t]
                for a, b in itertools.combinations(combo, 2)
                for t in range(inst.k)
            )
            if disjoint:
                out.append(combo)
    return out


def oracle_stable_matchings(inst: Instance) -> list[tuple[tuple[int, ...], ...]]:
    return [m for m in oracle_all_matchings(inst) if oracle_is_stable(inst, m)]


def as_matching(families) -> Matching:
    return Matching.of([tuple(f) for f in families])


@pytest.fixture(scope="session")
def rank0_first_instance() -> Instance:
    """Complete k=3, n=2 instance where every agent ranks index 0 first."""
    row = (((0, 1), (0, 1)),) * 3
    return Instance(3, 2, row)


@pytest.fixture(scope="session")
def tiny_complete() -> Instance:
    """Complete k=3, n=1 instance."""
    return Instance(3, 1, (((0,),), ((0,),), ((0,),)))


@pytest.fixture(scope="session")
def no_stable_instance() -> Instance:
    from kdsm import parse_instance

    return parse_instance((DATA / "no_stable_3dsmi.kdsm").read_text())
