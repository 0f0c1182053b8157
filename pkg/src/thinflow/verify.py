"""Independent feasibility and equilibrium checks on exact piecewise data.

All functions involved are affine between known breakpoints, so comparing
them at every breakpoint, every midpoint and one point on each unbounded
ray decides the statement for all times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

from . import engine
from .engine import EquilibriumTrajectory
from .loading import LoadingResult, PathFlowSet, earliest_arrival, load, queue_evolve
from .netmodel import Network, derive_edge_sets
from .pwfn import (
    INF,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
    compose_monotone,
    integrate,
    min_pointwise,
    positive_part,
)

KINDS = (
    "capacity",
    "non-deficit",
    "conservation",
    "capacity-operation",
    "inactive-inflow",
    "cumulative-mismatch",
    "label-recursion",
)

_RELATIONS = {
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


@dataclass(frozen=True)
class Violation:
    """``lhs relation rhs`` should hold at ``at`` (a time or an interval) but does not."""

    kind: str
    where: str
    at: Fraction | tuple
    lhs: Fraction
    relation: str
    rhs: Fraction
    detail: str = ""

    def reproduces(self) -> bool:
        return not _RELATIONS[self.relation](self.lhs, self.rhs)


# --------------------------------------------------------------------------- grids


def grid(fns: Iterable[PiecewiseLinearFn], upto=INF) -> list[Fraction]:
    """Breakpoints up to ``upto``, midpoints, ``upto`` itself and one point per ray."""
    pts = sorted({b for f in fns for b in f.breakpoints if b <= upto})
    if upto != INF and (not pts or pts[-1] < upto):
        pts.append(upto)
    if not pts:
        pts = [Fraction(0)]
    out = [pts[0] - 1]
    for a, b in zip(pts, pts[1:]):
        out += [a, (a + b) / 2]
    out.append(pts[-1])
    if upto == INF:
        out.append(pts[-1] + 1)
    return out


def _mismatches(f: PiecewiseLinearFn, g: PiecewiseLinearFn, upto=INF) -> Iterator[Fraction]:
    for theta in grid([f, g], upto):
        if f(theta) != g(theta):
            yield theta


def _first_negative(g: PiecewiseLinearFn, upto=INF) -> Fraction | None:
    for theta in grid([g], upto):
        if g(theta) < 0:
            return theta
    b0, v0 = g.breakpoints[0], g.values[0]
    if g.slope_left > 0:
        return b0 - v0 / g.slope_left - 1
    if upto == INF and g.slope_right < 0:
        return g.breakpoints[-1] - g.values[-1] / g.slope_right + 1
    return None


def _pieces_before(f: PiecewiseConstantFn, upto) -> Iterator[tuple]:
    for start, end, value in f.pieces():
        if start < upto:
            yield start, min(end, upto), value


def _frontier(traj: EquilibriumTrajectory, v: str):
    return INF if traj.end == INF else traj.labels[v](traj.end)


# --------------------------------------------------------------------------- feasibility


def check_feasible(net: Network, obj, path_flows: PathFlowSet | None = None) -> list[Violation]:
    """Capacity, non-deficit and conservation for a trajectory or a loading result."""
    if isinstance(obj, LoadingResult):
        return _feasible_loading(net, obj, path_flows)
    return _feasible_trajectory(net, obj)


def _capacity(net, e, outflow: PiecewiseConstantFn, upto=INF) -> list[Violation]:
    return [
        Violation("capacity", e.id, (a, b), v, "<=", e.capacity, "outflow rate above capacity")
        for a, b, v in _pieces_before(outflow, upto)
        if v > e.capacity
    ]


def _deficit(e, inflow: PiecewiseConstantFn, outflow: PiecewiseConstantFn, upto=INF) -> list[Violation]:
    z = integrate(inflow) - integrate(outflow).translate(-e.latency)
    theta = _first_negative(z, upto)
    if theta is None:
        return []
    return [Violation("non-deficit", e.id, theta, z(theta), ">=", Fraction(0), "queue length negative")]


def _feasible_trajectory(net: Network, traj: EquilibriumTrajectory) -> list[Violation]:
    out: list[Violation] = []
    for e in net.edges:
        out += _capacity(net, e, traj.outflow_rates[e.id], _frontier(traj, e.head))
        upto = min(_frontier(traj, e.tail), _frontier(traj, e.head) - e.latency)
        out += _deficit(e, traj.inflow_rates[e.id], traj.outflow_rates[e.id], upto)
    for v in net.sorted_nodes():
        if v == net.sink:
            continue
        balance = PiecewiseConstantFn.zero()
        for e in net.out_edges(v):
            balance = balance + traj.inflow_rates[e.id]
        for e in net.in_edges(v):
            balance = balance - traj.outflow_rates[e.id]
        want = traj.inflow if v == net.source else PiecewiseConstantFn.zero()
        for a, b, d in _pieces_before(balance - want, _frontier(traj, v)):
            if d != 0:
                out.append(Violation("conservation", v, (a, b), balance(a), "==", want(a), "node balance"))
    return out


def _feasible_loading(net: Network, res: LoadingResult, pf: PathFlowSet | None) -> list[Violation]:
    out: list[Violation] = []
    for e in net.edges:
        out += _capacity(net, e, res.edge_outflow[e.id])
        out += _deficit(e, res.edge_inflow[e.id], res.edge_outflow[e.id])
        share_in = [f for (pid, eid), f in sorted(res.path_inflow.items()) if eid == e.id]
        share_out = [f for (pid, eid), f in sorted(res.path_outflow.items()) if eid == e.id]
        for total, shares, label in ((res.edge_inflow[e.id], share_in, "inflow"), (res.edge_outflow[e.id], share_out, "outflow")):
            acc = PiecewiseConstantFn.zero()
            for f in shares:
                acc = acc + f
            for a, b, d in (total - acc).pieces():
                if d != 0:
                    out.append(Violation("conservation", e.id, (a, b), total(a), "==", acc(a), f"path split of {label}"))
    if pf is None:
        return out
    for pid in sorted(pf.paths):
        path = pf.paths[pid]
        first = res.path_inflow[(pid, path[0])]
        for a, b, d in (first - pf.rates[pid]).pieces():
            if d != 0:
                out.append(Violation("conservation", path[0], (a, b), first(a), "==", pf.rates[pid](a), f"path {pid} entry"))
        for prev, nxt in zip(path, path[1:]):
            fo, fi = res.path_outflow[(pid, prev)], res.path_inflow[(pid, nxt)]
            for a, b, d in (fi - fo).pieces():
                if d != 0:
                    out.append(Violation("conservation", nxt, (a, b), fi(a), "==", fo(a), f"path {pid} handover"))
    return out


# --------------------------------------------------------------------------- equilibrium


def check_equilibrium(net: Network, traj: EquilibriumTrajectory) -> list[Violation]:
    out: list[Violation] = []
    end = traj.end
    labels = traj.labels
    for theta in _mismatches(labels[net.source], PiecewiseLinearFn.identity(), end):
        out.append(Violation("label-recursion", net.source, theta, labels[net.source](theta), "==", theta, "source label"))
        break
    exit_at_tail: dict[str, PiecewiseLinearFn] = {}
    for e in net.edges:
        lv, lw = labels[e.tail], labels[e.head]
        if not lv.is_monotone() or not lw.is_monotone():
            bad = e.tail if not lv.is_monotone() else e.head
            out.append(Violation("label-recursion", bad, end, Fraction(0), "==", Fraction(1), "label not nondecreasing"))
            continue
        x_in = compose_monotone(integrate(traj.inflow_rates[e.id]), lv)
        x_out = compose_monotone(integrate(traj.outflow_rates[e.id]), lw)
        for theta in _mismatches(x_in, x_out, end):
            out.append(Violation("cumulative-mismatch", e.id, theta, x_in(theta), "==", x_out(theta), "F+(l_v) vs F-(l_w)"))
            break
        for theta in _mismatches(x_in, traj.cumulative[e.id], end):
            out.append(
                Violation("cumulative-mismatch", e.id, theta, traj.cumulative[e.id](theta), "==", x_in(theta), "recorded x_e")
            )
            break
        z, exit_time = queue_evolve(traj.inflow_rates[e.id], e.capacity, e.latency)
        exit_at_tail[e.id] = compose_monotone(exit_time, lv)
        formula = positive_part(lw - lv - e.latency).scale(e.capacity)
        z_at_tail = compose_monotone(z, lv)
        for theta in _mismatches(z_at_tail, formula, end):
            out.append(Violation("capacity-operation", e.id, theta, z_at_tail(theta), "==", formula(theta), "queue vs label gap"))
            break
        for theta in _mismatches(traj.queues[e.id], formula, end):
            out.append(Violation("capacity-operation", e.id, theta, traj.queues[e.id](theta), "==", formula(theta), "recorded queue"))
            break
        out += _inactive_inflow(e, traj, exit_at_tail[e.id])
    for w in net.sorted_nodes():
        if w == net.source:
            continue
        cands = [exit_at_tail[e.id] for e in net.in_edges(w) if e.id in exit_at_tail]
        if not cands:
            continue
        best = min_pointwise(cands)
        for theta in _mismatches(labels[w], best, end):
            out.append(Violation("label-recursion", w, theta, labels[w](theta), "==", best(theta), "l_w vs min_e T_e(l_v)"))
            break
    out += _phase_consistency(net, traj)
    return out


def _inactive_inflow(e, traj: EquilibriumTrajectory, exit_at_tail: PiecewiseLinearFn) -> list[Violation]:
    lv, lw = traj.labels[e.tail], traj.labels[e.head]
    end = traj.end
    pts = sorted({b for f in (lv, lw, exit_at_tail) for b in f.breakpoints if b < end})
    if not pts:
        pts = [Fraction(0)]
    intervals = [(None, pts[0], pts[0] - 1)]
    intervals += [(a, b, (a + b) / 2) for a, b in zip(pts, pts[1:])]
    if end == INF:
        intervals.append((pts[-1], None, pts[-1] + 1))
    elif end > pts[-1]:
        intervals.append((pts[-1], end, (pts[-1] + end) / 2))
    out = []
    f = traj.inflow_rates[e.id]
    for a, b, m in intervals:
        if exit_at_tail(m) <= lw(m):
            continue
        lo = -INF if a is None else lv(a)
        hi = INF if b is None else lv(b)
        if not lo < hi:
            continue
        for start, stop, value in f.pieces():
            if value != 0 and start < hi and stop > lo:
                out.append(
                    Violation(
                        "inactive-inflow", e.id, (max(start, lo), min(stop, hi)), value, "==", Fraction(0),
                        f"edge inactive for theta in ({a}, {b})",
                    )
                )
    return out


def _phase_consistency(net: Network, traj: EquilibriumTrajectory) -> list[Violation]:
    out = []
    for p in traj.phases:
        at = {v: traj.labels[v](p.start) for v in net.nodes}
        derived = derive_edge_sets(net, at)
        for e in net.edges:
            gap = at[e.head] - at[e.tail]
            rec_active, rec_reset = e.id in p.active, e.id in p.resetting
            if (rec_active, rec_reset) == (e.id in derived.active, e.id in derived.resetting):
                continue
            relation = ">" if rec_reset else "==" if rec_active else "<"
            out.append(Violation("label-recursion", e.id, p.start, gap, relation, e.latency, "recorded edge sets vs labels"))
    return out


def check_capacity_operation(net: Network, res: LoadingResult) -> list[Violation]:
    out: list[Violation] = []
    for e in net.edges:
        f_in, f_out = res.edge_inflow[e.id], res.edge_outflow[e.id]
        out += [
            Violation("capacity-operation", e.id, (a, b), v, "<=", e.capacity, "(a) outflow above capacity")
            for a, b, v in f_out.pieces()
            if v > e.capacity
        ]
        z = res.queue[e.id]
        theta = _first_negative(z)
        if theta is not None:
            out.append(Violation("capacity-operation", e.id, theta, z(theta), ">=", Fraction(0), "(b) negative queue"))
        big_in, big_out = integrate(f_in), integrate(f_out)
        z_flows = big_in - big_out.translate(-e.latency)
        for theta in _mismatches(z, z_flows):
            out.append(Violation("capacity-operation", e.id, theta, z(theta), "==", z_flows(theta), "(c) queue vs cumulative flows"))
            break
        wait = res.exit_time[e.id] - PiecewiseLinearFn.identity() - e.latency
        for theta in _mismatches(wait, z.scale(1 / e.capacity)):
            out.append(Violation("capacity-operation", e.id, theta, wait(theta), "==", z(theta) / e.capacity, "(c) delay vs z/nu"))
            break
        through = compose_monotone(big_out, res.exit_time[e.id]) if res.exit_time[e.id].is_monotone() else None
        if through is None:
            out.append(Violation("capacity-operation", e.id, Fraction(0), Fraction(0), "==", Fraction(1), "exit time not FIFO"))
            continue
        for theta in _mismatches(through, big_in):
            out.append(Violation("capacity-operation", e.id, theta, through(theta), "==", big_in(theta), "(c) throughput"))
            break
    return out


# --------------------------------------------------------------------------- cross check


@dataclass
class CrossCheckReport:
    horizon: Fraction
    checked: list[Fraction] = field(default_factory=list)
    mismatches: list[tuple[str, Fraction, Fraction, Fraction]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def first(self):
        return self.mismatches[0] if self.mismatches else None


def default_horizon(traj: EquilibriumTrajectory) -> Fraction:
    return traj.end if traj.end != INF else traj.phases[-1].start + 1


def path_id(path: tuple[str, ...]) -> str:
    return "/".join(path)


def trajectory_path_flows(net: Network, traj: EquilibriumTrajectory, horizon=None) -> PathFlowSet:
    """Decompose every phase's thin flow into path inflow rates on the source clock."""
    horizon = default_horizon(traj) if horizon is None else horizon
    pieces: dict[tuple[str, ...], list[tuple[Fraction, Fraction]]] = {}
    starts = []
    for p in traj.phases:
        if p.start >= horizon:
            break
        starts.append(p.start)
        for path, h in engine.decompose_paths(net, p.active, p.flow).items():
            pieces.setdefault(path, []).append((p.start, h))
    rates = {}
    for path, items in sorted(pieces.items()):
        by_start = dict(items)
        seq = [(s, by_start.get(s, Fraction(0))) for s in starts]
        rates[path_id(path)] = PiecewiseConstantFn.from_pieces(seq + [(horizon, Fraction(0))])
    return PathFlowSet({path_id(p): p for p in sorted(pieces)}, rates, horizon)


def cross_check(net: Network, u: PiecewiseConstantFn, traj: EquilibriumTrajectory, horizon=None) -> CrossCheckReport:
    horizon = default_horizon(traj) if horizon is None else horizon
    pf = trajectory_path_flows(net, traj, horizon)
    total = PiecewiseConstantFn.zero()
    for h in pf.rates.values():
        total = total + h
    if total != u.cut(horizon):
        raise ValueError("path flows of the trajectory do not add up to the network inflow")
    res = load(net, pf, allow_zero_latency=True)
    arrival = earliest_arrival(net, res.exit_time, net.source)
    report = CrossCheckReport(horizon)
    points = sorted({p.start for p in traj.phases if p.start <= horizon} | {horizon})
    for theta in points:
        report.checked.append(theta)
        for v in net.sorted_nodes():
            a, b = traj.labels[v](theta), arrival[v](theta)
            if a != b:
                report.mismatches.append((v, theta, a, b))
    return report
