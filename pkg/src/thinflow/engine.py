"""Phase-by-phase construction of the dynamic equilibrium for piecewise-constant inflow.

Each phase solves a thin flow for the current active/resetting edge sets,
extends all labels linearly with the thin-flow labels as slopes, and stops
when an inactive edge would become active, a queue would run empty, or the
inflow rate changes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from . import ntf as ntf_mod
from .netmodel import Network, derive_edge_sets, ensure_valid, free_flow_labels, hypothesis_violations
from .pwfn import INF, PiecewiseConstantFn, PiecewiseLinearFn, as_rational

log = logging.getLogger(__name__)

DEFAULT_PHASE_CAP = 10_000

ACTIVATION = "activation"
DEPLETION = "depletion"
INFLOW_BREAKPOINT = "inflow-breakpoint"
STEADY_STATE = "steady-state"


class EngineError(RuntimeError):
    """An internal invariant of the construction failed."""


class PhaseAccumulationError(RuntimeError):
    def __init__(self, phases: int, theta: Fraction, estimate):
        self.phases = phases
        self.theta = theta
        self.estimate = estimate
        super().__init__(
            f"possible phase accumulation: {phases} phases reached only theta={theta}"
            f" (accumulation point estimate {estimate})"
        )


@dataclass(frozen=True)
class Binding:
    kind: str
    edge: str | None = None


@dataclass(frozen=True)
class Phase:
    start: Fraction
    end: Fraction | float  # INF for the steady-state phase
    labels_at_start: dict[str, Fraction]
    active: frozenset[str]
    resetting: frozenset[str]
    inflow: Fraction
    flow: dict[str, Fraction]
    label_slopes: dict[str, Fraction]
    binding: Binding

    @property
    def length(self):
        return self.end - self.start

    def labels_at(self, theta) -> dict[str, Fraction]:
        return {v: l + (theta - self.start) * self.label_slopes[v] for v, l in self.labels_at_start.items()}


@dataclass
class EquilibriumTrajectory:
    network: Network
    inflow: PiecewiseConstantFn
    phases: list[Phase]
    end: Fraction | float
    labels: dict[str, PiecewiseLinearFn] = field(default_factory=dict)
    cumulative: dict[str, PiecewiseLinearFn] = field(default_factory=dict)
    inflow_rates: dict[str, PiecewiseConstantFn] = field(default_factory=dict)
    outflow_rates: dict[str, PiecewiseConstantFn] = field(default_factory=dict)
    queues: dict[str, PiecewiseLinearFn] = field(default_factory=dict)

    def breakpoints(self) -> list[Fraction]:
        pts = [p.start for p in self.phases]
        if self.end != INF:
            pts.append(self.end)
        return pts


def initialize(net: Network) -> dict[str, Fraction]:
    ensure_valid(net)
    return free_flow_labels(net)


def max_step(
    net: Network,
    labels: Mapping[str, Fraction],
    slopes: Mapping[str, Fraction],
    active: frozenset[str],
    resetting: frozenset[str],
    theta: Fraction,
    next_breakpoint: Fraction | None,
) -> tuple[Fraction | float, Binding]:
    best: tuple = (INF, Binding(STEADY_STATE))
    for e in net.edges:
        v, w = e.tail, e.head
        gap = labels[w] - labels[v]
        rate = slopes[w] - slopes[v]
        if e.id not in active and rate > 0:
            alpha = (e.latency - gap) / rate
            if alpha < best[0]:
                best = (alpha, Binding(ACTIVATION, e.id))
        elif e.id in resetting and rate < 0:
            alpha = (gap - e.latency) / -rate
            if alpha < best[0]:
                best = (alpha, Binding(DEPLETION, e.id))
    if next_breakpoint is not None and next_breakpoint - theta < best[0]:
        best = (next_breakpoint - theta, Binding(INFLOW_BREAKPOINT))
    if best[0] <= 0:
        raise EngineError(f"nonpositive step {best[0]} at theta={theta} ({best[1]})")
    return best


def _next_breakpoint(u: PiecewiseConstantFn, theta: Fraction) -> Fraction | None:
    return next((b for b in u.breakpoints if b > theta), None)


def _queue_slope(e, phase: Phase) -> Fraction:
    rate = phase.label_slopes[e.head] - phase.label_slopes[e.tail]
    if e.id in phase.resetting or (e.id in phase.active and rate > 0):
        return e.capacity * rate
    return Fraction(0)


def build_trajectory(net: Network, inflow: PiecewiseConstantFn, phases: list[Phase]) -> EquilibriumTrajectory:
    """Assemble label, cumulative, rate and queue functions from a phase log."""
    if not phases:
        raise ValueError("a trajectory needs at least one phase")
    end = phases[-1].end
    thetas = [p.start for p in phases]
    tail = [] if end == INF else [end]
    last = phases[-1]

    labels = {}
    for v in net.sorted_nodes():
        vals = [p.labels_at_start[v] for p in phases]
        if tail:
            vals.append(last.labels_at(end)[v])
        labels[v] = PiecewiseLinearFn(thetas + tail, vals, 1, last.label_slopes[v])

    cumulative, queues, f_in, f_out = {}, {}, {}, {}
    for e in net.edges:
        x_vals = [Fraction(0)]
        z0 = phases[0].labels_at_start
        z_vals = [e.capacity * max(Fraction(0), z0[e.head] - z0[e.tail] - e.latency)]
        # one value per phase start, plus the finite end
        closed = phases if tail else phases[:-1]
        for p in closed:
            x_vals.append(x_vals[-1] + p.length * p.flow[e.id])
            z_vals.append(z_vals[-1] + p.length * _queue_slope(e, p))
        cumulative[e.id] = PiecewiseLinearFn(thetas + tail, x_vals, 0, last.flow[e.id])
        queues[e.id] = PiecewiseLinearFn(thetas + tail, z_vals, 0, _queue_slope(e, last))

        in_pieces, out_pieces = [], []
        for p in phases:
            sv, sw = p.label_slopes[e.tail], p.label_slopes[e.head]
            if sv > 0:
                in_pieces.append((p.labels_at_start[e.tail], p.flow[e.id] / sv))
            if sw > 0:
                out_pieces.append((p.labels_at_start[e.head], p.flow[e.id] / sw))
        f_in[e.id] = PiecewiseConstantFn.from_pieces(in_pieces)
        f_out[e.id] = PiecewiseConstantFn.from_pieces(out_pieces)

    return EquilibriumTrajectory(net, inflow, list(phases), end, labels, cumulative, f_in, f_out, queues)


def extend(trajectory: EquilibriumTrajectory, phase: Phase) -> EquilibriumTrajectory:
    if trajectory.end == INF or phase.start != trajectory.end:
        raise EngineError(f"phase starting at {phase.start} does not continue a trajectory ending at {trajectory.end}")
    return build_trajectory(trajectory.network, trajectory.inflow, trajectory.phases + [phase])


def _check_inflow(u: PiecewiseConstantFn) -> None:
    if u.default != 0 or any(b < 0 for b in u.breakpoints):
        raise ValueError("inflow must vanish on the negative axis")
    if any(v < 0 for v in u.values):
        raise ValueError("inflow rates must be nonnegative")


def next_phase(
    net: Network,
    u: PiecewiseConstantFn,
    theta: Fraction,
    labels: Mapping[str, Fraction],
    ntf_search: Callable = ntf_mod.find_ntf,
) -> Phase:
    pair = derive_edge_sets(net, labels)
    problems = hypothesis_violations(net, pair)
    if problems:
        raise EngineError(f"edge sets at theta={theta} violate (H): " + "; ".join(problems))
    u0 = u(theta)
    sol = ntf_search(ntf_mod.NtfInstance(net, pair.active, pair.resetting, u0))
    alpha, binding = max_step(
        net, labels, sol.labels, pair.active, pair.resetting, theta, _next_breakpoint(u, theta)
    )
    return Phase(
        start=theta,
        end=theta + alpha if alpha != INF else INF,
        labels_at_start=dict(labels),
        active=pair.active,
        resetting=pair.resetting,
        inflow=u0,
        flow=sol.flow,
        label_slopes=sol.labels,
        binding=binding,
    )


def solve_equilibrium(
    net: Network,
    u: PiecewiseConstantFn,
    horizon,
    phase_cap: int = DEFAULT_PHASE_CAP,
    ntf_search: Callable = ntf_mod.find_ntf,
) -> EquilibriumTrajectory:
    horizon = as_rational(horizon)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    _check_inflow(u)
    labels = initialize(net)
    theta = Fraction(0)
    phases: list[Phase] = []
    while True:
        if len(phases) >= phase_cap:
            raise PhaseAccumulationError(len(phases), theta, _accumulation_estimate(phases))
        phase = next_phase(net, u, theta, labels, ntf_search)
        phases.append(phase)
        log.debug("phase %d: [%s, %s) bound by %s", len(phases), phase.start, phase.end, phase.binding)
        if phase.end == INF or phase.end >= horizon:
            break
        theta = phase.end
        labels = phase.labels_at(theta)
    traj = build_trajectory(net, u, phases)
    if log.isEnabledFor(logging.DEBUG):
        log.debug("max queues: %s", {e: str(z) for e, z in sorted(max_queues(traj).items())})
    return traj


def max_queues(traj: EquilibriumTrajectory) -> dict[str, Fraction]:
    """Largest queue per edge over all time (INF if it keeps growing). Diagnostic only."""
    out = {}
    for eid, z in traj.queues.items():
        if z.slope_right > 0:
            out[eid] = INF
        else:
            out[eid] = max([Fraction(0), *z.values])
    return out


def _accumulation_estimate(phases: list[Phase]):
    if len(phases) < 2:
        return math.nan
    a1, a2 = phases[-2].length, phases[-1].length
    if a2 >= a1:
        return math.nan
    r = a2 / a1
    return phases[-1].end + a2 * r / (1 - r)


def decompose_paths(net: Network, active, x: Mapping[str, Fraction]) -> dict[tuple[str, ...], Fraction]:
    """Greedy path decomposition over ``s``-``t`` paths in lexicographic edge-id order."""
    support = {eid for eid, val in x.items() if val > 0}
    stray = support - set(active)
    if stray:
        raise ValueError("flow on edges outside the active set: " + ", ".join(sorted(stray)))
    paths: list[tuple[str, ...]] = []

    def walk(v: str, prefix: tuple[str, ...], seen: set[str]):
        if v == net.sink:
            paths.append(prefix)
            return
        for e in net.out_edges(v):
            if e.id in support and e.head not in seen:
                walk(e.head, prefix + (e.id,), seen | {e.head})

    walk(net.source, (), {net.source})
    residual = {eid: as_rational(val) for eid, val in x.items()}
    result: dict[tuple[str, ...], Fraction] = {}
    for path in sorted(paths):
        h = min(residual[eid] for eid in path)
        if h > 0:
            result[path] = h
            for eid in path:
                residual[eid] -= h
    leftover = {eid: r for eid, r in residual.items() if r != 0}
    if leftover:
        raise EngineError(f"path decomposition left residual flow {leftover}")
    return result
