"""Seeded random instances for tests and the ``gen`` subcommand."""

from __future__ import annotations

import random
from fractions import Fraction

from .formats import Scenario
from .loading import PathFlowSet
from .netmodel import Network
from .ntf import NtfInstance
from .pwfn import PiecewiseConstantFn

CAPACITIES = [Fraction(k, 2) for k in range(1, 7)]  # 1/2, 1, ..., 3
LATENCIES = [Fraction(k, 2) for k in range(1, 7)]


def _pick(rng: random.Random, seq):
    return seq[rng.randrange(len(seq))]


def random_network(rng: random.Random, max_nodes: int = 6, max_edges: int = 10, latencies=LATENCIES) -> Network:
    """Every node is reachable from ``s``; the sink is the last node."""
    n = rng.randint(2, max_nodes)
    names = ["s"] + [f"v{i}" for i in range(1, n - 1)] + ["t"]
    order = [names[0]] + rng.sample(names[1:], n - 1)
    pairs = []
    for i in range(1, n):
        pairs.append((order[rng.randrange(i)], order[i]))
    extra = rng.randint(0, max(0, max_edges - len(pairs)))
    for _ in range(extra):
        v, w = rng.sample(names, 2)
        pairs.append((v, w))
    edges = [
        (f"e{k}", v, w, _pick(rng, CAPACITIES), _pick(rng, latencies))
        for k, (v, w) in enumerate(pairs)
    ]
    return Network.build(edges, "s", "t", nodes=names)


def random_ntf_instance(rng: random.Random, max_nodes: int = 6, max_edges: int = 10) -> NtfInstance:
    """Random (E', E*) with E' acyclic, reaching every node, and E* a subset of E'."""
    n = rng.randint(2, max_nodes)
    names = ["s"] + [f"v{i}" for i in range(1, n - 1)] + ["t"]
    order = [names[0]] + rng.sample(names[1:], n - 1)
    rank = {v: i for i, v in enumerate(order)}
    active_pairs = [(order[rng.randrange(i)], order[i]) for i in range(1, n)]
    others = []
    for _ in range(rng.randint(0, max(0, max_edges - len(active_pairs)))):
        v, w = rng.sample(names, 2)
        if rank[v] < rank[w] and rng.random() < 0.6:
            active_pairs.append((v, w))
        else:
            others.append((v, w))
    edges, active, resetting = [], set(), set()
    for k, (v, w) in enumerate(active_pairs + others):
        eid = f"e{k}"
        edges.append((eid, v, w, _pick(rng, CAPACITIES), _pick(rng, LATENCIES)))
        if k < len(active_pairs):
            active.add(eid)
            if rng.random() < 0.4:
                resetting.add(eid)
    net = Network.build(edges, "s", "t", nodes=names)
    return NtfInstance(net, frozenset(active), frozenset(resetting), Fraction(rng.randint(0, 4)))


def random_pieces(rng: random.Random, max_pieces: int = 3, last_start: int = 10) -> PiecewiseConstantFn:
    k = min(rng.randint(1, max_pieces), 2 * last_start)
    starts = [Fraction(0)] + sorted(Fraction(s, 2) for s in rng.sample(range(1, 2 * last_start), k - 1))
    return PiecewiseConstantFn.from_pieces([(a, Fraction(rng.randint(0, 8), 2)) for a in starts])


def random_scenario(rng: random.Random, max_horizon: int = 20) -> Scenario:
    net = random_network(rng)
    horizon = Fraction(rng.randint(1, max_horizon))
    return Scenario(net, random_pieces(rng), horizon)


def _random_path(rng: random.Random, net: Network) -> tuple[str, ...]:
    v = _pick(rng, [e.tail for e in net.edges])
    seen, path = {v}, []
    while True:
        options = [e for e in net.out_edges(v) if e.head not in seen]
        if not options or (path and rng.random() < 0.3):
            return tuple(path)
        e = _pick(rng, options)
        path.append(e.id)
        seen.add(e.head)
        v = e.head


def random_path_flows(rng: random.Random, net: Network, max_paths: int = 3, max_horizon: int = 10) -> PathFlowSet:
    horizon = Fraction(rng.randint(1, max_horizon))
    paths, rates = {}, {}
    for i in range(rng.randint(1, max_paths)):
        pid = f"P{i + 1}"
        paths[pid] = _random_path(rng, net)
        rates[pid] = random_pieces(rng, last_start=int(horizon)).cut(horizon)
    return PathFlowSet(paths, rates, horizon)


def random_loading_scenario(rng: random.Random) -> Scenario:
    net = random_network(rng)
    pf = random_path_flows(rng, net)
    return Scenario(net, PiecewiseConstantFn.zero(), pf.horizon, pf)
