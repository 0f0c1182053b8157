"""Normalized thin flows with resetting.

A thin flow is found by guessing, for every active edge, how its
label-propagation constraint is met, which turns the problem into a linear
program. Guesses are explored depth-first in a fixed order, node by node in
topological order, and a partial guess is abandoned as soon as its LP
relaxation is infeasible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping

from . import exactlp
from .netmodel import Edge, EdgeSetPair, Network, hypothesis_violations, topological_order
from .pwfn import as_rational

DEFAULT_EDGE_CAP = 12

# per-edge guesses for an active, non-resetting edge e = vw
FLOW = "flow"  # tight, rho_e = x_e/nu_e >= l_v
LABEL = "label"  # tight, rho_e = l_v >= x_e/nu_e
SLACK = "slack"  # not tight: x_e = 0 and l_w <= l_v
# a resetting edge always has x_e = nu_e * l_w, see _edge_options
RESET = "reset"


class NtfInputError(ValueError):
    pass


class NtfSearchError(RuntimeError):
    """No guess produced a certified thin flow; existence says this cannot happen."""


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class NtfInstance:
    network: Network
    active: frozenset[str]
    resetting: frozenset[str]
    inflow: Fraction

    def __post_init__(self):
        object.__setattr__(self, "active", frozenset(self.active))
        object.__setattr__(self, "resetting", frozenset(self.resetting))
        object.__setattr__(self, "inflow", as_rational(self.inflow))
        if self.inflow < 0:
            raise NtfInputError(f"negative inflow value {self.inflow}")
        problems = hypothesis_violations(self.network, EdgeSetPair(self.active, self.resetting))
        if problems:
            raise NtfInputError("; ".join(problems))

    def active_edges(self) -> list[Edge]:
        return [e for e in self.network.edges if e.id in self.active]


@dataclass(frozen=True)
class NtfSolution:
    flow: dict[str, Fraction]
    labels: dict[str, Fraction]


@dataclass(frozen=True)
class NtfCertificate:
    valid: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


def rho(edge: Edge, tail_label: Fraction, flow: Fraction, resetting: frozenset[str]) -> Fraction:
    if edge.id in resetting:
        return flow / edge.capacity
    return max(tail_label, flow / edge.capacity)


def flow_violations(inst: NtfInstance, x: Mapping[str, Fraction]) -> list[str]:
    """Reasons why ``x`` is not in K(E', u0)."""
    net = inst.network
    problems = []
    for eid in sorted(set(x) - set(net.edge_ids())):
        problems.append(f"flow given on unknown edge {eid}")
    for e in net.edges:
        val = x.get(e.id, 0)
        if val < 0:
            problems.append(f"negative flow {val} on edge {e.id}")
        if val != 0 and e.id not in inst.active:
            problems.append(f"flow {val} on inactive edge {e.id}")
    for v in net.sorted_nodes():
        if v == net.sink and v != net.source:
            continue
        out = sum((x.get(e.id, 0) for e in net.out_edges(v)), Fraction(0))
        inc = sum((x.get(e.id, 0) for e in net.in_edges(v)), Fraction(0))
        want = inst.inflow if v == net.source else Fraction(0)
        if out - inc != want:
            problems.append(f"net outflow {out - inc} at node {v}, expected {want}")
    return problems


def compute_labels(inst: NtfInstance, x: Mapping[str, Fraction]) -> dict[str, Fraction]:
    problems = flow_violations(inst, x)
    if problems:
        raise NtfInputError("flow not in K(E', u0): " + "; ".join(problems))
    return _labels(inst, x)


def _labels(inst: NtfInstance, x: Mapping[str, Fraction]) -> dict[str, Fraction]:
    net = inst.network
    labels = {net.source: Fraction(1)}
    for w in topological_order(net, inst.active):
        if w == net.source:
            continue
        labels[w] = min(
            rho(e, labels[e.tail], as_rational(x.get(e.id, 0)), inst.resetting)
            for e in net.in_edges(w)
            if e.id in inst.active
        )
    return {v: labels[v] for v in net.sorted_nodes()}


def is_ntf(inst: NtfInstance, sol: NtfSolution) -> NtfCertificate:
    net = inst.network
    violations = flow_violations(inst, sol.flow)
    labels = sol.labels
    missing = [v for v in net.sorted_nodes() if v not in labels]
    if missing:
        violations.append("labels missing for nodes " + ", ".join(missing))
        return NtfCertificate(False, violations)
    if labels[net.source] != 1:
        violations.append(f"source label {labels[net.source]} != 1")
    for w in net.sorted_nodes():
        if w == net.source:
            continue
        rhos = [
            rho(e, labels[e.tail], as_rational(sol.flow.get(e.id, 0)), inst.resetting)
            for e in net.in_edges(w)
            if e.id in inst.active
        ]
        if rhos and labels[w] != min(rhos):
            violations.append(f"label of {w} is {labels[w]}, recursion gives {min(rhos)}")
    for e in inst.active_edges():
        xe = as_rational(sol.flow.get(e.id, 0))
        r = rho(e, labels[e.tail], xe, inst.resetting)
        if xe > 0 and labels[e.head] < r:
            violations.append(f"edge {e.id} carries flow {xe} but label {labels[e.head]} < rho {r}")
    return NtfCertificate(not violations, violations)


# --------------------------------------------------------------------------- search


def _edge_options(inst: NtfInstance, e: Edge) -> tuple[str, ...]:
    # For e in E*, l_w <= x_e/nu_e together with complementarity forces
    # x_e = nu_e l_w, so the "not tight" guess adds nothing.
    return (RESET,) if e.id in inst.resetting else (FLOW, LABEL, SLACK)


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, a: str) -> str:
        self.parent.setdefault(a, a)
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


def _build_lp(inst: NtfInstance, guess: Mapping[str, str], objective: bool) -> tuple[exactlp.LinearProgram, dict, dict]:
    """Linearize the thin-flow conditions under ``guess`` by substitution.

    Labels tied by LABEL guesses share a variable; flows pinned by FLOW/RESET
    guesses are expressed through the head label. Edges missing from ``guess``
    keep only the relaxation ``x_e <= nu_e l_w``.

    Affine expressions are dicts ``var -> coeff`` with ``""`` for the constant.
    """
    net = inst.network
    s = net.source
    uf = _UnionFind()
    for e in inst.active_edges():
        if guess.get(e.id) == LABEL:
            uf.union(e.tail, e.head)
    src_class = uf.find(s)

    def label(v: str) -> dict:
        root = uf.find(v)
        return {"": Fraction(1)} if root == src_class else {f"l:{root}": Fraction(1)}

    def flow(e: Edge) -> dict:
        g = guess.get(e.id)
        if g in (FLOW, RESET):
            return {k: c * e.capacity for k, c in label(e.head).items()}
        if g == SLACK:
            return {}
        return {f"x:{e.id}": Fraction(1)}

    lp = exactlp.LinearProgram(variables=[], objective={})
    names: dict[str, None] = {}

    def add(expr_lhs: dict, rel: str, expr_rhs: dict) -> bool:
        coeffs: dict[str, Fraction] = {}
        for k, c in expr_lhs.items():
            coeffs[k] = coeffs.get(k, 0) + c
        for k, c in expr_rhs.items():
            coeffs[k] = coeffs.get(k, 0) - c
        const = coeffs.pop("", Fraction(0))
        coeffs = {k: c for k, c in coeffs.items() if c}
        if not coeffs:
            return {"<=": const <= 0, ">=": const >= 0, "==": const == 0}[rel]
        for k in coeffs:
            names.setdefault(k)
        lp.add(coeffs, rel, -const)
        return True

    ok = True
    flows = {e.id: flow(e) for e in inst.active_edges()}
    for v in net.sorted_nodes():
        if v == net.sink and v != net.source:
            continue
        net_out: dict[str, Fraction] = {}
        for e in net.out_edges(v):
            for k, c in flows.get(e.id, {}).items():
                net_out[k] = net_out.get(k, 0) + c
        for e in net.in_edges(v):
            for k, c in flows.get(e.id, {}).items():
                net_out[k] = net_out.get(k, 0) - c
        want = inst.inflow if v == s else Fraction(0)
        ok &= add(net_out, "==", {"": want})
    for e in inst.active_edges():
        g = guess.get(e.id)
        lw, lv = label(e.head), label(e.tail)
        if g == FLOW:
            ok &= add(lw, ">=", lv)
        elif g == SLACK:
            ok &= add(lw, "<=", lv)
        elif g in (LABEL, None):
            ok &= add(flows[e.id], "<=", {k: c * e.capacity for k, c in lw.items()})
    for v in net.sorted_nodes():
        for k in label(v):
            if k:
                names.setdefault(k)
    lp.variables = sorted(names)
    if objective:
        obj: dict[str, Fraction] = {}
        for v in net.sorted_nodes():
            for k, c in label(v).items():
                if k:
                    obj[k] = obj.get(k, 0) + c
        lp.objective = obj
    if not ok:
        # a constant constraint failed; encode as an infeasible LP
        lp.variables = lp.variables or ["_"]
        lp.add({lp.variables[0]: 1}, "<=", -1)
    return lp, flows, {v: label(v) for v in net.nodes}


def _value(expr: Mapping[str, Fraction], point: Mapping[str, Fraction]) -> Fraction:
    return sum((c * (Fraction(1) if k == "" else point[k]) for k, c in expr.items()), Fraction(0))


def _node_patterns(inst: NtfInstance, w: str) -> list[dict[str, str]]:
    incoming = [e for e in inst.network.in_edges(w) if e.id in inst.active]
    out = []
    for combo in itertools.product(*(_edge_options(inst, e) for e in incoming)):
        if any(c != SLACK for c in combo):
            out.append({e.id: c for e, c in zip(incoming, combo)})
    return out


def _certified(inst: NtfInstance) -> Iterator[tuple[dict[str, str], NtfSolution]]:
    """Certified thin flows, one per feasible complete guess, in guess order."""
    net = inst.network
    order = [w for w in topological_order(net, inst.active) if w != net.source]
    patterns = [_node_patterns(inst, w) for w in order]

    def dfs(depth: int, guess: dict[str, str]):
        if depth == len(order):
            lp, flows, labels = _build_lp(inst, guess, objective=True)
            outcome = exactlp.solve(lp)
            if not outcome.optimal:
                return
            x = {eid: _value(expr, outcome.assignment) for eid, expr in flows.items()}
            x = {e.id: x.get(e.id, Fraction(0)) for e in net.edges}
            sol = NtfSolution(x, compute_labels(inst, x))
            lp_labels = {v: _value(labels[v], outcome.assignment) for v in net.sorted_nodes()}
            if lp_labels != sol.labels:
                raise NtfSearchError(f"LP labels {lp_labels} disagree with recursion {sol.labels}")
            if is_ntf(inst, sol):
                yield dict(guess), sol
            return
        for pattern in patterns[depth]:
            trial = {**guess, **pattern}
            if depth + 1 < len(order):
                lp, _, _ = _build_lp(inst, trial, objective=False)
                if exactlp.solve(lp).status == "infeasible":
                    continue
            yield from dfs(depth + 1, trial)

    yield from dfs(0, {})


def find_ntf(inst: NtfInstance) -> NtfSolution:
    if inst.inflow == 0:
        zero = {e.id: Fraction(0) for e in inst.network.edges}
        return NtfSolution(zero, compute_labels(inst, zero))
    for _, sol in _certified(inst):
        return sol
    raise NtfSearchError("no certified thin flow found; a thin flow always exists, so the search is incomplete")


def _label_extremes(inst: NtfInstance, guess: Mapping[str, str]) -> Iterator[NtfSolution]:
    """Thin flows minimizing and maximizing each label variable under ``guess``.

    Every feasible point of a complete guess is a thin flow, so the labels
    are constant on the guess exactly when all these extremes agree.
    """
    net = inst.network
    lp, flows, _ = _build_lp(inst, guess, objective=False)
    for k in lp.variables:
        if not k.startswith("l:"):
            continue
        for sign in (1, -1):
            lp.objective = {k: Fraction(sign)}
            outcome = exactlp.solve(lp)
            if outcome.optimal:
                x = {eid: _value(expr, outcome.assignment) for eid, expr in flows.items()}
                x = {e.id: x.get(e.id, Fraction(0)) for e in net.edges}
                yield NtfSolution(x, compute_labels(inst, x))


def enumerate_all_ntf_labels(inst: NtfInstance, edge_cap: int = DEFAULT_EDGE_CAP) -> list[dict[str, Fraction]]:
    """Distinct label vectors over all thin flows (expected: exactly one).

    Covers every complete guess, and within each guess the extreme values
    of every label, so two thin flows with different labels cannot hide.
    """
    if len(inst.active) > edge_cap:
        raise EnumerationTooLarge(f"{len(inst.active)} active edges exceed the enumeration cap {edge_cap}")
    seen: dict[tuple, dict[str, Fraction]] = {}
    if inst.inflow == 0:
        sols = [find_ntf(inst)]
    else:
        sols = []
        for guess, sol in _certified(inst):
            sols.append(sol)
            sols.extend(_label_extremes(inst, guess))
    for sol in sols:
        if not is_ntf(inst, sol):
            raise NtfSearchError(f"guess region contains a non thin flow {sol}")
        key = tuple(sorted(sol.labels.items()))
        seen.setdefault(key, sol.labels)
    return [seen[k] for k in sorted(seen)]
