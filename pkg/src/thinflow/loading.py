"""Network loading: propagate piecewise-constant path inflows through point queues.

Requires strictly positive latencies. Each round recomputes every queue from
the currently known edge inflows; a path's inflow into its next edge is known
up to the exit time of the horizon on the previous edge, which advances by at
least the smallest latency per round. Once a horizon passes the support bound
``M`` the remainder is zero and the horizon becomes infinite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .netmodel import Network, ensure_valid
from .pwfn import (
    INF,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
    as_rational,
    compose_monotone,
    min_pointwise,
)

DEFAULT_ROUND_CAP = 100_000


class LoadingError(RuntimeError):
    pass


class LoadingPreconditionError(ValueError):
    pass


@dataclass
class PathFlowSet:
    """Path inflow rates ``h_P``, each supported on ``[0, horizon]``."""

    paths: dict[str, tuple[str, ...]]
    rates: dict[str, PiecewiseConstantFn]
    horizon: Fraction

    def __post_init__(self):
        self.paths = {pid: tuple(p) for pid, p in self.paths.items()}
        self.horizon = as_rational(self.horizon)

    def problems(self, net: Network) -> list[str]:
        out = []
        known = set(net.edge_ids())
        if set(self.paths) != set(self.rates):
            out.append("paths and rates have different ids")
        for pid in sorted(self.paths):
            path = self.paths[pid]
            if not path:
                out.append(f"path {pid} is empty")
                continue
            if any(eid not in known for eid in path):
                out.append(f"path {pid} uses unknown edges")
                continue
            edges = [net.edge(eid) for eid in path]
            for a, b in zip(edges, edges[1:]):
                if a.head != b.tail:
                    out.append(f"path {pid}: edge {b.id} does not start where {a.id} ends")
            nodes = [edges[0].tail] + [e.head for e in edges]
            if len(set(nodes)) != len(nodes):
                out.append(f"path {pid} is not simple")
            h = self.rates.get(pid)
            if h is None:
                continue
            if h.default != 0 or any(v < 0 for v in h.values):
                out.append(f"path {pid} has negative rate or flow before time 0")
            if h.breakpoints and h.breakpoints[0] < 0:
                out.append(f"path {pid} has flow before time 0")
            if h.support_end() > self.horizon:
                out.append(f"path {pid} has flow after the horizon {self.horizon}")
        return out

    def origin(self, net: Network, pid: str) -> str:
        return net.edge(self.paths[pid][0]).tail

    def destination(self, net: Network, pid: str) -> str:
        return net.edge(self.paths[pid][-1]).head

    def total_mass(self) -> Fraction:
        return sum((h.integrate()(self.horizon) for h in self.rates.values()), Fraction(0))


@dataclass
class LoadingResult:
    edge_inflow: dict[str, PiecewiseConstantFn]
    edge_outflow: dict[str, PiecewiseConstantFn]
    queue: dict[str, PiecewiseLinearFn]
    exit_time: dict[str, PiecewiseLinearFn]
    path_inflow: dict[tuple[str, str], PiecewiseConstantFn]
    path_outflow: dict[tuple[str, str], PiecewiseConstantFn]
    path_time: dict[str, PiecewiseLinearFn]
    bound: Fraction
    rounds: int = 0


def queue_evolve(inflow: PiecewiseConstantFn, capacity, latency) -> tuple[PiecewiseLinearFn, PiecewiseLinearFn]:
    """Queue length and exit time for an edge fed at rate ``inflow``."""
    nu = as_rational(capacity)
    tau = as_rational(latency)
    if inflow.default != 0:
        raise ValueError("edge inflow must vanish before its first breakpoint")
    if not inflow.breakpoints:
        z = PiecewiseLinearFn.zero()
    else:
        pts = [inflow.breakpoints[0]]
        vals = [Fraction(0)]
        z_now = Fraction(0)
        bounds = list(inflow.breakpoints[1:]) + [None]
        slope_right = Fraction(0)
        for a, b, f in zip(inflow.breakpoints, bounds, inflow.values):
            net_rate = f - nu
            slope = Fraction(0) if z_now == 0 and net_rate <= 0 else net_rate
            if slope < 0:
                empty_at = a + z_now / -slope
                if b is None or empty_at < b:
                    pts.append(empty_at)
                    vals.append(Fraction(0))
                    z_now = Fraction(0)
                    slope = Fraction(0)
            if b is None:
                slope_right = slope
                break
            if slope:
                z_now += slope * (b - a)
            pts.append(b)
            vals.append(z_now)
        z = PiecewiseLinearFn(pts, vals, 0, slope_right)
    exit_time = PiecewiseLinearFn.identity() + z.scale(1 / nu) + tau
    return z, exit_time


def transfer_outflow(path_inflow: PiecewiseConstantFn, exit_time: PiecewiseLinearFn) -> PiecewiseConstantFn:
    """Outflow rate of one path's share, pushed through the exit-time map."""
    points = sorted(set(path_inflow.breakpoints) | set(exit_time.breakpoints))
    if exit_time.slope_left <= 0:
        raise LoadingError("exit time must increase before the first event")
    default = path_inflow.default / exit_time.slope_left
    pieces = []
    for i, a in enumerate(points):
        slope = exit_time.slope_at(a)
        f = path_inflow(a)
        if slope == 0:
            if f != 0:
                end = points[i + 1] if i + 1 < len(points) else INF
                raise LoadingError(f"flow {f} enters on [{a}, {end}) while the exit time is flat")
            continue
        pieces.append((exit_time(a), f / slope))
    return PiecewiseConstantFn.from_pieces(pieces, default)


def support_bound(net: Network, pf: PathFlowSet) -> Fraction:
    """``M = T + m * delta`` with ``delta = max_e (zbar/nu_e + tau_e)``."""
    zbar = pf.total_mass()
    delta = max((zbar / e.capacity + e.latency for e in net.edges), default=Fraction(0))
    m = max((len(p) for p in pf.paths.values()), default=0)
    return pf.horizon + m * delta


def load(
    net: Network, pf: PathFlowSet, round_cap: int = DEFAULT_ROUND_CAP, allow_zero_latency: bool = False
) -> LoadingResult:
    """Unique loading of ``pf``.

    ``allow_zero_latency`` drops the positive-latency precondition. The rounds
    then still terminate whenever zero-latency edges do not feed each other
    in a loop of unsettled horizons, and raise ``LoadingError`` otherwise.
    """
    ensure_valid(net, require_reachable=False)
    zero_latency = [e.id for e in net.edges if e.latency <= 0]
    if zero_latency and not allow_zero_latency:
        raise LoadingPreconditionError("network loading needs positive latencies; zero on " + ", ".join(zero_latency))
    problems = pf.problems(net)
    if problems:
        raise ValueError("invalid path flows: " + "; ".join(problems))
    bound = support_bound(net, pf)

    # (path id, position) -> (inflow of that path into that edge, known-until)
    known: dict[tuple[str, int], tuple[PiecewiseConstantFn, Fraction | float]] = {}
    users: dict[str, list[tuple[str, int]]] = {e.id: [] for e in net.edges}
    for pid in sorted(pf.paths):
        for i, eid in enumerate(pf.paths[pid]):
            users[eid].append((pid, i))
            known[(pid, i)] = (pf.rates[pid], INF) if i == 0 else (PiecewiseConstantFn.zero(), Fraction(0))

    rounds = 0
    while True:
        rounds += 1
        if rounds > round_cap:
            raise LoadingError(f"loading did not settle within {round_cap} rounds")
        settled = all(h == INF for _, h in known.values())
        queue, exit_time, outflow = {}, {}, {}
        for e in net.edges:
            total = PiecewiseConstantFn.zero()
            horizon = INF
            for key in users[e.id]:
                fn, h = known[key]
                total = total + fn
                horizon = min(horizon, h)
            queue[e.id], exit_time[e.id] = queue_evolve(total, e.capacity, e.latency)
            out_horizon = INF if horizon == INF else exit_time[e.id](horizon)
            for pid, i in users[e.id]:
                outflow[(pid, i)] = (transfer_outflow(known[(pid, i)][0], exit_time[e.id]), out_horizon)
        if settled:
            break
        progress = False
        for (pid, i), (fn, h) in outflow.items():
            if i + 1 == len(pf.paths[pid]):
                continue
            if h != INF and h >= bound:
                if _nonzero_between(fn, bound, h):
                    raise LoadingError(f"path {pid} carries flow beyond the support bound {bound}")
                fn, h = fn.cut(bound), INF
            if (fn, h) != known[(pid, i + 1)]:
                progress = True
            known[(pid, i + 1)] = (fn, h)
        if not progress:
            raise LoadingError("loading horizons stopped advancing")

    path_in = {(pid, pf.paths[pid][i]): known[(pid, i)][0] for pid, i in known}
    path_out = {(pid, pf.paths[pid][i]): fn for (pid, i), (fn, _) in outflow.items()}
    edge_in, edge_out = {}, {}
    for e in net.edges:
        edge_in[e.id] = _sum([path_in[(pid, e.id)] for pid, _ in users[e.id]])
        edge_out[e.id] = _sum([path_out[(pid, e.id)] for pid, _ in users[e.id]])
    path_time = {pid: path_exit_time(exit_time, pf.paths[pid]) for pid in sorted(pf.paths)}
    return LoadingResult(edge_in, edge_out, queue, exit_time, path_in, path_out, path_time, bound, rounds)


def _nonzero_between(fn: PiecewiseConstantFn, lo, hi) -> bool:
    return any(v != 0 and start < hi and end > lo for start, end, v in fn.pieces())


def _sum(fns: list[PiecewiseConstantFn]) -> PiecewiseConstantFn:
    total = PiecewiseConstantFn.zero()
    for f in fns:
        total = total + f
    return total


def path_exit_time(exit_time: Mapping[str, PiecewiseLinearFn], path) -> PiecewiseLinearFn:
    out = PiecewiseLinearFn.identity()
    for eid in path:
        out = compose_monotone(exit_time[eid], out)
    return out


def earliest_arrival(net: Network, exit_time: Mapping[str, PiecewiseLinearFn], origin: str) -> dict[str, PiecewiseLinearFn]:
    """Dynamic shortest-path labels from ``origin`` (minimum over all paths).

    Bellman-Ford over functions: after ``|V| - 1`` rounds every simple path
    has been relaxed, and walks with cycles never help because latencies are
    positive and exit times nondecreasing.
    """
    labels: dict[str, PiecewiseLinearFn] = {origin: PiecewiseLinearFn.identity()}
    for _ in range(len(net.nodes) - 1):
        changed = False
        for w in net.sorted_nodes():
            if w == origin:
                continue
            cands = [compose_monotone(exit_time[e.id], labels[e.tail]) for e in net.in_edges(w) if e.tail in labels]
            if not cands:
                continue
            if w in labels:
                cands.append(labels[w])
            new = min_pointwise(cands)
            if labels.get(w) != new:
                labels[w] = new
                changed = True
        if not changed:
            break
    return {v: labels[v] for v in net.sorted_nodes() if v in labels}


def path_times(net: Network, result: LoadingResult, pf: PathFlowSet):
    """Per-path arrival maps, per-origin node labels and per-OD earliest arrival."""
    per_path = {pid: path_exit_time(result.exit_time, pf.paths[pid]) for pid in sorted(pf.paths)}
    origins = sorted({pf.origin(net, pid) for pid in pf.paths})
    node_labels = {s: earliest_arrival(net, result.exit_time, s) for s in origins}
    od = {}
    for pid in sorted(pf.paths):
        s, t = pf.origin(net, pid), pf.destination(net, pid)
        od[(s, t)] = node_labels[s][t]
    return per_path, node_labels, od
