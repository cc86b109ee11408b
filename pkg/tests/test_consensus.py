import io
import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from oracles import oracle_is_quorum, oracle_minimal_quorums, random_slices
from trustscope.consensus import (
    BYZANTINE,
    EDGE_SERVER,
    FbaNetwork,
    NetworkTooLarge,
    QuorumSlice,
    ba_tolerance,
    build_scope_network,
    edge_server_id,
    enumerate_minimal_quorums,
    federated_vote,
    is_quorum,
    max_quorum_within,
    quorums_intersect,
)
from trustscope.scoping import Scope


def test_worked_example(abc_network):
    assert is_quorum(abc_network, {"A", "B", "C"})
    assert not is_quorum(abc_network, {"B", "C"})
    with_d = FbaNetwork.from_slices({"A": [{"B", "C", "D"}], "B": [{"C"}], "C": [{"A", "B"}], "D": [{"D"}]})
    assert not is_quorum(with_d, {"A", "B", "C"})
    assert is_quorum(with_d, {"A", "B", "C", "D"})


def test_candidate_validation(abc_network):
    with pytest.raises(ValueError):
        is_quorum(abc_network, set())
    with pytest.raises(ValueError):
        is_quorum(abc_network, {"A", "Z"})
    with pytest.raises(ValueError):
        FbaNetwork.from_slices({"A": [{"Q"}]})
    with pytest.raises(ValueError):
        QuorumSlice(frozenset())


def test_minimal_quorums_examples(abc_network):
    assert enumerate_minimal_quorums(abc_network) == [frozenset("ABC")]
    solo = FbaNetwork.from_slices({"n": [{"n"}]})
    assert enumerate_minimal_quorums(solo) == [frozenset("n")]
    # two self-trusting islands
    islands = FbaNetwork.from_slices({"a": [{"a"}], "b": [{"b"}], "c": [{"a", "b"}]})
    assert enumerate_minimal_quorums(islands) == [frozenset("a"), frozenset("b")]
    assert not quorums_intersect(islands)
    assert quorums_intersect(abc_network)
    assert quorums_intersect(solo)


def test_enumeration_matches_brute_force():
    rng = random.Random(11)
    for _ in range(200):
        n = rng.randint(1, 8)
        slices = random_slices(rng, n, max_slices=2, max_slice_size=3)
        got = set(enumerate_minimal_quorums(FbaNetwork.from_slices(slices)))
        assert got == oracle_minimal_quorums(slices)


def test_enumeration_order_is_stable():
    net = FbaNetwork.from_slices({i: [{i}] for i in (3, 1, 2)} | {9: [{1, 2}]})
    assert enumerate_minimal_quorums(net) == [frozenset({1}), frozenset({2}), frozenset({3})]


def test_enumeration_cap():
    net = FbaNetwork.from_slices({i: [{i}] for i in range(21)})
    with pytest.raises(NetworkTooLarge):
        enumerate_minimal_quorums(net)


def test_max_quorum_within_is_union_of_contained_quorums():
    rng = random.Random(5)
    for _ in range(100):
        n = rng.randint(1, 7)
        slices = random_slices(rng, n, max_slice_size=3)
        net = FbaNetwork.from_slices(slices)
        within = frozenset(rng.sample(range(n), rng.randint(0, n)))
        quorums = [q for r in range(1, len(within) + 1)
                   for q in map(frozenset, combinations(sorted(within), r)) if oracle_is_quorum(slices, q)]
        assert max_quorum_within(net, within) == frozenset().union(*quorums)


def test_monotone_extension_exhaustive():
    # S quorum, T ⊇ S, every added node has a slice in T  =>  T quorum
    rng = random.Random(7)
    for _ in range(15):
        n = rng.randint(2, 7)
        slices = random_slices(rng, n, max_slice_size=3)
        net = FbaNetwork.from_slices(slices)
        subsets = [frozenset(c) for r in range(1, n + 1) for c in combinations(range(n), r)]
        for s in subsets:
            if not is_quorum(net, s):
                continue
            for t in subsets:
                if s <= t and all(any(x <= t for x in slices[v]) for v in t - s):
                    assert is_quorum(net, t)


def test_vote_outcomes(abc_network):
    out = federated_vote(abc_network, b"v")
    assert out.accepted and out.quorum == frozenset("ABC") and out.value == b"v"
    assert not federated_vote(abc_network, honest_vote=False).accepted
    c_bad = FbaNetwork.from_slices({"A": [{"B", "C"}], "B": [{"C"}], "C": [{"A", "B"}]}, byzantine={"C"})
    assert not federated_vote(c_bad).accepted
    all_bad = FbaNetwork.from_slices({"A": [{"A"}], "B": [{"B"}]}, byzantine={"A", "B"})
    assert not federated_vote(all_bad).accepted


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_accepting_quorum_is_honest(n, seed):
    rng = random.Random(seed)
    slices = random_slices(rng, n, max_slice_size=3)
    bad = set(rng.sample(range(n), rng.randint(0, n)))
    net = FbaNetwork.from_slices(slices, byzantine=bad)
    out = federated_vote(net)
    if out.accepted:
        assert out.quorum and not out.quorum & bad
        assert oracle_is_quorum(slices, out.quorum)
    else:
        honest = frozenset(range(n)) - bad
        assert not any(oracle_is_quorum(slices, frozenset(c))
                       for r in range(1, len(honest) + 1) for c in combinations(sorted(honest), r))


def test_ba_tolerance():
    assert ba_tolerance(10) == 3
    assert ba_tolerance(1) == 0
    assert ba_tolerance(4) == 1
    assert [ba_tolerance(n) for n in range(1, 8)] == [0, 0, 0, 1, 1, 1, 2]
    assert all(ba_tolerance(3 * f + 1) == f for f in range(101))
    with pytest.raises(ValueError):
        ba_tolerance(0)


def test_scope_network_shape():
    solo = build_scope_network(Scope(0, frozenset({4}), 4), devices_per_microcell=0, slice_size=1)
    assert list(solo.nodes) == [edge_server_id(4)]
    assert is_quorum(solo, solo.nodes)

    scope = Scope(1, frozenset({1, 2, 3}), 2)
    net = build_scope_network(scope, devices_per_microcell=2, slice_size=3, seed=4)
    assert len(net) == 9
    assert sum(n.role == EDGE_SERVER for n in net.nodes.values()) == 3
    for node in net.nodes.values():
        [s] = node.slices
        assert len(s.members) == 3
    assert net.nodes["dev:2:1"].slices[0].members >= {"es:2"}
    assert is_quorum(net, net.nodes)
    assert federated_vote(net).accepted
    assert build_scope_network(scope, 2, 3, seed=4) == net


def test_scope_network_byzantine_devices_only():
    scope = Scope(1, frozenset(range(5)), 0)
    net = build_scope_network(scope, devices_per_microcell=2, seed=1, byzantine_fraction=0.5)
    bad = [n for n in net.nodes.values() if n.behavior == BYZANTINE]
    assert len(bad) == 5
    assert all(n.role != EDGE_SERVER for n in bad)


def test_network_json_round_trip():
    net = FbaNetwork.from_slices({"A": [{"B", "C"}, {"A"}], "B": [{"C"}], "C": [{"A", "B"}]}, byzantine={"B"})
    buf = io.StringIO()
    net.dump(buf)
    buf.seek(0)
    assert FbaNetwork.load(buf) == net
