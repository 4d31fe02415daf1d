import random

import pytest

from kdsm import (
    Budget,
    Instance,
    Matching,
    SolveStatus,
    SpaceTooLargeError,
    complete_instance,
    count_matchings,
    count_weakly_stable,
    enumerate_weakly_stable,
    find_blocking_cycle,
    find_blocking_naive,
    find_weakly_stable,
    random_instance,
)
from conftest import as_matching, oracle_all_matchings, oracle_stable_matchings


class TestEnumerate:
    def test_unique_solution_n1(self, tiny_complete):
        assert enumerate_weakly_stable(tiny_complete) == [Matching.of([(0, 0, 0)])]

    def test_rank0_first_has_both_perfect_matchings(self, rank0_first_instance):
        # brute force over all 8 families certifies the stable set; both the
        # aligned and the swapped perfect matching are in it
        want = {
            tuple(sorted(m)) for m in oracle_stable_matchings(rank0_first_instance)
        }
        assert ((0, 0, 0), (1, 1, 1)) in want
        assert ((0, 1, 1), (1, 0, 0)) in want
        got = enumerate_weakly_stable(rank0_first_instance)
        assert {tuple(f.members for f in m) for m in got} == want

    def test_matches_oracle_on_random_incomplete(self):
        rng = random.Random(3)
        for _ in range(25):
            inst = random_instance(rng.getrandbits(32), 3, rng.randint(0, 3), rng.choice((0.3, 0.6)))
            want = sorted(tuple(sorted(m)) for m in oracle_stable_matchings(inst))
            got = sorted(
                tuple(sorted(f.members for f in m))
                for m in enumerate_weakly_stable(inst)
            )
            assert got == want

    def test_limit_is_canonical_prefix(self, rank0_first_instance):
        full = enumerate_weakly_stable(rank0_first_instance)
        assert enumerate_weakly_stable(rank0_first_instance, limit=1) == full[:1]

    def test_canonical_order_sorted(self):
        inst = random_instance(17, 3, 3, 1.0)
        got = [tuple(f.members for f in m) for m in enumerate_weakly_stable(inst)]
        assert got == sorted(got)

    def test_space_bound(self):
        big = random_instance(0, 3, 60, 1.0)
        with pytest.raises(SpaceTooLargeError) as exc:
            enumerate_weakly_stable(big, max_families=1000)
        assert exc.value.required > exc.value.bound

    def test_no_stable_fixture_enumerates_empty(self, no_stable_instance):
        assert enumerate_weakly_stable(no_stable_instance) == []


class TestCount:
    def test_unique_n1(self, tiny_complete):
        assert count_weakly_stable(tiny_complete) == 1

    def test_identical_prefs_give_at_least_two(self):
        # all agents of a type share one list; full enumeration counts the
        # stable matchings directly
        inst = Instance(3, 2, (((0, 1), (0, 1)),) * 3)
        assert count_weakly_stable(inst) == len(oracle_stable_matchings(inst)) >= 2

    def test_fast_path_matches_enumeration(self):
        rng = random.Random(9)
        for _ in range(20):
            inst = random_instance(rng.getrandbits(32), 3, rng.randint(1, 3), 1.0)
            assert count_weakly_stable(inst) == len(enumerate_weakly_stable(inst))

    def test_small_complete_instances_nonzero(self):
        rng = random.Random(10)
        for _ in range(30):
            inst = random_instance(rng.getrandbits(32), 3, rng.randint(1, 4), 1.0)
            assert count_weakly_stable(inst) >= 1

    def test_count_matchings_against_oracle(self):
        rng = random.Random(11)
        for _ in range(15):
            inst = random_instance(rng.getrandbits(32), 3, 2, rng.choice((0.4, 0.8)))
            assert count_matchings(inst) == len(oracle_all_matchings(inst))


class TestFind:
    def test_trivial_found(self, tiny_complete):
        out = find_weakly_stable(tiny_complete)
        assert out.status is SolveStatus.FOUND
        assert out.matching == Matching.of([(0, 0, 0)])

    def test_no_stable_fixture_exhausts(self, no_stable_instance):
        out = find_weakly_stable(no_stable_instance)
        assert out.status is SolveStatus.EXHAUSTED_NONE
        assert out.matching is None

    def test_budget_exceeded_is_inconclusive(self, no_stable_instance):
        out = find_weakly_stable(no_stable_instance, Budget(max_nodes=2))
        assert out.status is SolveStatus.BUDGET_EXCEEDED

    def test_completed_no_stable_never_found_small_budget(self, no_stable_instance):
        comp, _ = complete_instance(no_stable_instance)
        out = find_weakly_stable(comp, Budget(max_nodes=30_000))
        assert out.status in (SolveStatus.BUDGET_EXCEEDED, SolveStatus.EXHAUSTED_NONE)
        assert out.status is not SolveStatus.FOUND

    def test_agrees_with_enumeration(self):
        rng = random.Random(13)
        for _ in range(40):
            inst = random_instance(rng.getrandbits(32), 3, rng.randint(0, 3), rng.choice((0.3, 0.7, 1.0)))
            count = len(enumerate_weakly_stable(inst))
            out = find_weakly_stable(inst)
            if count:
                assert out.status is SolveStatus.FOUND
                assert find_blocking_naive(inst, out.matching) is None
                assert find_blocking_cycle(inst, out.matching) is None
            else:
                assert out.status is SolveStatus.EXHAUSTED_NONE

    def test_deterministic_nodes(self, no_stable_instance):
        a = find_weakly_stable(no_stable_instance)
        b = find_weakly_stable(no_stable_instance)
        assert a.nodes_explored == b.nodes_explored
        assert a.status == b.status

    def test_found_matchings_perfect_on_complete(self):
        rng = random.Random(14)
        for _ in range(10):
            inst = random_instance(rng.getrandbits(32), 3, rng.randint(1, 4), 1.0)
            out = find_weakly_stable(inst)
            assert out.status is SolveStatus.FOUND
            assert len(out.matching) == inst.n

    def test_empty_instance(self):
        inst = random_instance(0, 3, 0, 1.0)
        out = find_weakly_stable(inst)
        assert out.status is SolveStatus.FOUND
        assert out.matching == Matching.of([])
