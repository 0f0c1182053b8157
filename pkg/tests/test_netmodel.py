import random
from fractions import Fraction as F

import pytest

from conftest import two_route_network
from oracles import shortest_by_enumeration
from thinflow.generate import random_network
from thinflow.netmodel import (
    CycleError,
    EdgeSetPair,
    Network,
    NetworkError,
    derive_edge_sets,
    ensure_valid,
    free_flow_labels,
    hypothesis_violations,
    topological_order,
    validate,
)


def test_validate_two_route():
    assert validate(two_route_network()) == []


def test_validate_unreachable_node():
    net = Network.build([("a", "s", "t", 1, 1), ("b", "x", "t", 1, 1)], "s", "t")
    problems = validate(net)
    assert len(problems) == 1 and "x" in problems[0]


def test_validate_zero_latency_cycle():
    net = Network.build([("a", "s", "v", 1, 1), ("b", "v", "w", 1, 0), ("c", "w", "v", 1, 0), ("d", "w", "t", 1, 1)], "s", "t")
    problems = validate(net)
    assert len(problems) == 1 and "cycle" in problems[0]


def test_validate_rejects_bad_numbers_and_loops():
    net = Network.build([("a", "s", "t", 0, 1), ("b", "s", "t", 1, -1), ("c", "t", "t", 1, 1)], "s", "t")
    problems = validate(net)
    assert len(problems) == 3
    with pytest.raises(NetworkError):
        ensure_valid(net)


def test_validate_positive_latency_cycle_is_fine():
    net = Network.build([("a", "s", "t", 1, 1), ("b", "t", "s", 1, 0)], "s", "t")
    assert validate(net) == []


def test_free_flow_labels_examples():
    assert free_flow_labels(two_route_network()) == {"r": 1, "s": 0, "t": 2}
    single = Network.build([], "s", "s", nodes=["s"])
    assert free_flow_labels(single) == {"s": 0}
    par = Network.build([("a", "s", "t", 1, 1), ("b", "s", "t", 1, 1)], "s", "t")
    assert free_flow_labels(par) == {"s": 0, "t": 1}


def test_free_flow_labels_against_path_enumeration():
    for seed in range(60):
        net = random_network(random.Random(seed), latencies=[F(0), F(1, 2), F(1), F(3)])
        if validate(net):
            continue
        assert free_flow_labels(net) == shortest_by_enumeration(net)


def test_free_flow_bellman_condition():
    for seed in range(30):
        net = random_network(random.Random(100 + seed))
        lab = free_flow_labels(net)
        assert lab[net.source] == 0
        for w in net.nodes:
            if w != net.source:
                assert lab[w] == min(lab[e.tail] + e.latency for e in net.in_edges(w))


def test_derive_edge_sets_two_route():
    net = two_route_network()
    at0 = derive_edge_sets(net, {"s": 0, "r": 1, "t": 2})
    assert (at0.active, at0.resetting) == ({"a", "b"}, set())
    at1 = derive_edge_sets(net, {"s": 1, "r": 3, "t": 4})
    assert (at1.active, at1.resetting) == ({"a", "b"}, {"a"})


def test_derive_edge_sets_free_flow_has_no_resetting():
    for seed in range(20):
        net = random_network(random.Random(seed))
        pair = derive_edge_sets(net, free_flow_labels(net))
        assert pair.resetting == frozenset()
        assert hypothesis_violations(net, pair) == []


def test_derive_edge_sets_reports_but_does_not_raise():
    net = two_route_network()
    pair = derive_edge_sets(net, {"s": 0, "r": 0, "t": 5})
    assert pair.resetting <= pair.active
    assert hypothesis_violations(net, pair)


def test_hypothesis_violations():
    net = two_route_network()
    assert hypothesis_violations(net, EdgeSetPair(frozenset("ab"), frozenset("c")))
    assert hypothesis_violations(net, EdgeSetPair(frozenset("b"), frozenset()))
    cyc = Network.build([("a", "s", "t", 1, 1), ("b", "t", "s", 1, 1)], "s", "t")
    assert hypothesis_violations(cyc, EdgeSetPair(frozenset("ab"), frozenset()))


def test_topological_order():
    net = two_route_network()
    assert topological_order(net, {"a", "b"}) == ["s", "r", "t"]
    assert topological_order(net, set())[0] == "s"
    diamond = Network.build(
        [("sa", "s", "a", 1, 1), ("sb", "s", "b", 1, 1), ("at", "a", "t", 1, 1), ("bt", "b", "t", 1, 1)], "s", "t"
    )
    order = topological_order(diamond, diamond.edge_ids())
    pos = {v: i for i, v in enumerate(order)}
    assert all(pos[e.tail] < pos[e.head] for e in diamond.edges)


def test_topological_order_names_cycle():
    net = Network.build([("a", "s", "v", 1, 1), ("b", "v", "w", 1, 1), ("c", "w", "v", 1, 1), ("d", "w", "t", 1, 1)], "s", "t")
    with pytest.raises(CycleError) as info:
        topological_order(net, net.edge_ids())
    assert set(info.value.cycle) >= {"v", "w"}


def test_parallel_edges_allowed():
    net = Network.build([("e1", "s", "t", 1, 1), ("e2", "s", "t", 2, 1)], "s", "t")
    assert validate(net) == []
    assert [e.id for e in net.out_edges("s")] == ["e1", "e2"]
