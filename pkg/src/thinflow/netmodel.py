"""Network data model, validation and static graph utilities."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .pwfn import as_rational


class NetworkError(ValueError):
    """The network violates a model assumption."""


class CycleError(ValueError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cycle detected: " + " -> ".join(cycle))


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    capacity: Fraction
    latency: Fraction

    def __post_init__(self):
        object.__setattr__(self, "capacity", as_rational(self.capacity))
        object.__setattr__(self, "latency", as_rational(self.latency))


@dataclass(frozen=True)
class Network:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    source: str
    sink: str
    _by_id: dict = field(init=False, repr=False, compare=False)
    _out: dict = field(init=False, repr=False, compare=False)
    _in: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.id)))
        by_id = {e.id: e for e in self.edges}
        out: dict[str, list[Edge]] = {v: [] for v in self.nodes}
        inc: dict[str, list[Edge]] = {v: [] for v in self.nodes}
        for e in self.edges:
            out.setdefault(e.tail, []).append(e)
            inc.setdefault(e.head, []).append(e)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", inc)

    @classmethod
    def build(cls, edges: Iterable[tuple], source: str, sink: str, nodes: Iterable[str] | None = None) -> Network:
        """Convenience constructor from ``(id, tail, head, capacity, latency)`` tuples."""
        edge_objs = [Edge(*e) for e in edges]
        if nodes is None:
            seen: dict[str, None] = {source: None}
            for e in edge_objs:
                seen.setdefault(e.tail)
                seen.setdefault(e.head)
            seen.setdefault(sink)
            nodes = list(seen)
        return cls(tuple(nodes), tuple(edge_objs), source, sink)

    def edge(self, edge_id: str) -> Edge:
        return self._by_id[edge_id]

    def edge_ids(self) -> list[str]:
        return [e.id for e in self.edges]

    def out_edges(self, v: str) -> list[Edge]:
        return self._out.get(v, [])

    def in_edges(self, v: str) -> list[Edge]:
        return self._in.get(v, [])

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes)


@dataclass(frozen=True)
class EdgeSetPair:
    active: frozenset[str]
    resetting: frozenset[str]


def validate(net: Network, require_reachable: bool = True) -> list[str]:
    """Problems with ``net``; reachability from the source is optional for multi-origin loading."""
    problems: list[str] = []
    nodes = set(net.nodes)
    if len(nodes) != len(net.nodes):
        problems.append("duplicate node ids")
    ids = [e.id for e in net.edges]
    for eid in sorted({i for i in ids if ids.count(i) > 1}):
        problems.append(f"duplicate edge id {eid}")
    for v, role in ((net.source, "source"), (net.sink, "sink")):
        if v not in nodes:
            problems.append(f"{role} {v} is not a node")
    for e in net.edges:
        if e.tail not in nodes or e.head not in nodes:
            problems.append(f"edge {e.id} has an unknown endpoint")
        if e.tail == e.head:
            problems.append(f"edge {e.id} is a loop at {e.tail}")
        if e.capacity <= 0:
            problems.append(f"edge {e.id} has nonpositive capacity {e.capacity}")
        if e.latency < 0:
            problems.append(f"edge {e.id} has negative latency {e.latency}")
    if problems:
        return problems
    reached = _reachable(net, net.source, [e.id for e in net.edges])
    for v in net.sorted_nodes():
        if require_reachable and v not in reached:
            problems.append(f"node {v} is unreachable from source {net.source}")
    zero = [e.id for e in net.edges if e.latency == 0]
    try:
        topological_order(net, zero)
    except CycleError as exc:
        problems.append("zero-latency cycle " + " -> ".join(exc.cycle))
    return problems


def ensure_valid(net: Network, require_reachable: bool = True) -> None:
    problems = validate(net, require_reachable)
    if problems:
        raise NetworkError("; ".join(problems))


def _reachable(net: Network, start: str, edge_ids: Iterable[str]) -> set[str]:
    allowed = set(edge_ids)
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for e in net.out_edges(v):
            if e.id in allowed and e.head not in seen:
                seen.add(e.head)
                stack.append(e.head)
    return seen


def free_flow_labels(net: Network) -> dict[str, Fraction]:
    """Shortest ``s``-``v`` distances under the latencies (empty queues)."""
    dist: dict[str, Fraction] = {net.source: Fraction(0)}
    heap = [(Fraction(0), net.source)]
    done: set[str] = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for e in net.out_edges(v):
            nd = d + e.latency
            if e.head not in dist or nd < dist[e.head]:
                dist[e.head] = nd
                heapq.heappush(heap, (nd, e.head))
    return {v: dist[v] for v in net.sorted_nodes() if v in dist}


def derive_edge_sets(net: Network, labels: Mapping[str, Fraction]) -> EdgeSetPair:
    active, resetting = set(), set()
    for e in net.edges:
        gap = labels[e.head] - labels[e.tail]
        if gap >= e.latency:
            active.add(e.id)
            if gap > e.latency:
                resetting.add(e.id)
    return EdgeSetPair(frozenset(active), frozenset(resetting))


def hypothesis_violations(net: Network, pair: EdgeSetPair) -> list[str]:
    """Problems with ``pair`` w.r.t. E* in E' in E, E' acyclic, E' spanning from s."""
    problems = []
    known = set(net.edge_ids())
    for eid in sorted(pair.active - known):
        problems.append(f"active edge {eid} is not in the network")
    for eid in sorted(pair.resetting - pair.active):
        problems.append(f"resetting edge {eid} is not active")
    try:
        topological_order(net, pair.active & known)
    except CycleError as exc:
        problems.append("active edges contain cycle " + " -> ".join(exc.cycle))
    reached = _reachable(net, net.source, pair.active)
    for v in net.sorted_nodes():
        if v not in reached:
            problems.append(f"no path from {net.source} to {v} within the active edges")
    return problems


def topological_order(net: Network, edges: Iterable[str]) -> list[str]:
    """Kahn's algorithm with lexicographic tie-breaking, source first."""
    chosen = [net.edge(eid) for eid in sorted(set(edges))]
    indeg = {v: 0 for v in net.nodes}
    succ: dict[str, list[str]] = {v: [] for v in net.nodes}
    for e in chosen:
        indeg[e.head] += 1
        succ[e.tail].append(e.head)

    def key(v: str) -> tuple[bool, str]:
        return (v != net.source, v)

    heap = [key(v) for v in net.nodes if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, v = heapq.heappop(heap)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, key(w))
    if len(order) < len(net.nodes):
        raise CycleError(_find_cycle(net, chosen))
    return order


def _find_cycle(net: Network, edges: list[Edge]) -> list[str]:
    succ: dict[str, list[str]] = {v: [] for v in net.nodes}
    for e in edges:
        succ[e.tail].append(e.head)
    color = {v: 0 for v in net.nodes}
    stack_path: list[str] = []

    def dfs(v: str) -> list[str] | None:
        color[v] = 1
        stack_path.append(v)
        for w in succ[v]:
            if color[w] == 1:
                return stack_path[stack_path.index(w):] + [w]
            if color[w] == 0:
                found = dfs(w)
                if found:
                    return found
        stack_path.pop()
        color[v] = 2
        return None

    for v in sorted(net.nodes):
        if color[v] == 0:
            found = dfs(v)
            if found:
                return found
    return []
