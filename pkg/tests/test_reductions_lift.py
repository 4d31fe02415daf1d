import random

import pytest

from kdsm import (
    AgentRef,
    DimensionError,
    Instance,
    Matching,
    TransportFormError,
    enumerate_weakly_stable,
    find_blocking_naive,
    lift_3_to_k,
    parse_map,
    random_instance,
    transport_matching,
    validate_instance,
)
from conftest import oracle_stable_matchings


def make3(n, rows):
    return Instance(3, n, tuple(tuple(tuple(l) for l in row) for row in rows))


class TestLiftConstruction:
    def test_sizes(self):
        inst = random_instance(1, 3, 2, 0.6)
        lifted, cmap = lift_3_to_k(inst, 5)
        assert lifted.k == 5 and lifted.n == 4
        assert cmap.n_out == 4
        assert validate_instance(lifted).ok

    def test_wrong_dimension_rejected(self):
        inst = random_instance(1, 4, 2, 1.0)
        with pytest.raises(DimensionError):
            lift_3_to_k(inst, 5)
        with pytest.raises(DimensionError):
            lift_3_to_k(random_instance(1, 3, 2, 1.0), 3)

    def test_type2_lists_follow_input_order(self):
        # dog 0 ranks man 1 before man 0; its diagonal image must rank the
        # chain (0, 1, 3) before (0, 0, 3)
        inst = make3(2, [[(1,), (0,)], [(0,), (1,)], [(1, 0), (0,)]])
        lifted, cmap = lift_3_to_k(inst, 5)
        nd = cmap.non_dummy(AgentRef(2, 0))
        assert lifted.prefs[2][nd.i] == (cmap.to_output(0, 1, 3).i, cmap.to_output(0, 0, 3).i)

    def test_chain_and_wrap_lists(self):
        inst = make3(2, [[(1,), (0,)], [(0,), (1,)], [(1, 0), (0,)]])
        lifted, cmap = lift_3_to_k(inst, 5)
        # (j, 0) acceptable to dog i: singleton pass-along, then wrap to (j, j, 0)
        assert lifted.prefs[3][cmap.to_output(0, 1, 3).i] == (cmap.to_output(0, 1, 4).i,)
        assert lifted.prefs[4][cmap.to_output(0, 1, 4).i] == (cmap.to_output(1, 1, 0).i,)
        # dog 1 does not accept man 1, so that chain is broken
        assert lifted.prefs[3][cmap.to_output(1, 1, 3).i] == ()

    def test_off_diagonal_first_types_empty(self):
        inst = random_instance(2, 3, 3, 1.0)
        lifted, cmap = lift_3_to_k(inst, 4)
        for t in range(3):
            for i in range(3):
                for j in range(3):
                    if i != j:
                        assert lifted.prefs[t][cmap.to_output(i, j, t).i] == ()

    def test_map_round_trip(self):
        inst = random_instance(3, 3, 2, 0.8)
        _, cmap = lift_3_to_k(inst, 6)
        parsed = parse_map(cmap.serialize())
        assert parsed == cmap
        for i in range(2):
            for j in range(2):
                for t in range(6):
                    a = cmap.to_output(i, j, t)
                    assert cmap.from_output(a) == (i, j, t)


class TestTransport:
    def test_empty_matching(self):
        inst = random_instance(4, 3, 2, 1.0)
        _, cmap = lift_3_to_k(inst, 5)
        assert transport_matching(cmap, Matching.of([]), "up") == Matching.of([])
        assert transport_matching(cmap, Matching.of([]), "down") == Matching.of([])

    def test_canonical_family_shape(self):
        inst = random_instance(4, 3, 2, 1.0)
        _, cmap = lift_3_to_k(inst, 5)
        up = transport_matching(cmap, Matching.of([(0, 1, 0)]), "up")
        n = 2
        assert [f.members for f in up] == [
            (0 * n + 0, 1 * n + 1, 0 * n + 0, 0 * n + 0, 0 * n + 0)
        ]

    def test_down_rejects_malformed(self):
        inst = random_instance(4, 3, 2, 1.0)
        _, cmap = lift_3_to_k(inst, 5)
        with pytest.raises(TransportFormError):
            transport_matching(cmap, Matching.of([(1, 1, 1, 1, 1)]), "down")

    def test_round_trip_on_stable_matchings(self):
        rng = random.Random(7)
        for _ in range(25):
            inst = random_instance(rng.getrandbits(32), 3, rng.randint(1, 3), rng.choice((0.5, 1.0)))
            _, cmap = lift_3_to_k(inst, rng.choice((4, 5, 6)))
            for m in enumerate_weakly_stable(inst, limit=4):
                up = transport_matching(cmap, m, "up")
                assert transport_matching(cmap, up, "down") == m


class TestStabilityEquivalence:
    def test_matches_oracle_on_small_instances(self):
        rng = random.Random(11)
        for _ in range(20):
            inst = random_instance(rng.getrandbits(32), 3, 2, rng.choice((0.4, 0.8)))
            lifted, cmap = lift_3_to_k(inst, 5)
            stable_in = oracle_stable_matchings(inst)
            stable_out = enumerate_weakly_stable(lifted)
            assert (len(stable_in) >= 1) == (len(stable_out) >= 1)
            assert len(stable_in) == len(stable_out)

    def test_transported_stables_stay_stable_both_ways(self):
        rng = random.Random(13)
        for _ in range(15):
            inst = random_instance(rng.getrandbits(32), 3, 2, 0.7)
            lifted, cmap = lift_3_to_k(inst, 5)
            for m in enumerate_weakly_stable(inst):
                up = transport_matching(cmap, m, "up")
                assert find_blocking_naive(lifted, up) is None
            for mh in enumerate_weakly_stable(lifted):
                down = transport_matching(cmap, mh, "down")
                assert find_blocking_naive(inst, down) is None

    def test_no_stable_instance_lifts_to_no_stable(self, no_stable_instance):
        lifted, _ = lift_3_to_k(no_stable_instance, 5)
        assert enumerate_weakly_stable(lifted) == []
