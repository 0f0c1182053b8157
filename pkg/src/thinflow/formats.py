"""JSON and CSV formats. Rationals are always written as ``"p/q"`` strings.

Scenario grammar (``"format": 1``)::

    {
      "format": 1,
      "network": {"nodes": [...], "source": "s", "sink": "t",
                  "edges": [{"id": "a", "tail": "s", "head": "r",
                             "capacity": "1", "latency": "1"}, ...]},
      "inflow": [{"from": "0", "rate": "2"}, {"from": "1", "rate": "0"}],
      "horizon": "5",
      "path_flows": [{"id": "P1", "path": ["a", "b"],
                      "pieces": [{"from": "0", "rate": "1"}]}]
    }

``inflow`` and ``path_flows`` are each optional; ``inflow`` defaults to zero.
Rates are zero before the first ``from``. ``path_flows`` are cut at the horizon.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

from .engine import Binding, EquilibriumTrajectory, Phase
from .loading import LoadingResult, PathFlowSet
from .netmodel import Edge, Network
from .ntf import NtfInstance, NtfSolution
from .pwfn import INF, PiecewiseConstantFn, PiecewiseLinearFn, as_rational, format_rational
from .verify import CrossCheckReport, Violation

FORMAT = 1


class FormatError(ValueError):
    """Malformed input; the message names the offending location."""


def _r(value, where: str) -> Fraction:
    try:
        return as_rational(value)
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{where}: {exc}") from None


def _get(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def fmt_time(value) -> str:
    if value == INF:
        return "inf"
    if value == -INF:
        return "-inf"
    return format_rational(value)


def parse_time(value, where: str):
    if value == "inf":
        return INF
    if value == "-inf":
        return -INF
    return _r(value, where)


# --------------------------------------------------------------------------- functions


def pcf_to_json(f: PiecewiseConstantFn) -> dict:
    return {
        "default": format_rational(f.default),
        "pieces": [{"from": format_rational(b), "rate": format_rational(v)} for b, v in zip(f.breakpoints, f.values)],
    }


def pieces_from_json(pieces, where: str, *, strict: bool = True) -> PiecewiseConstantFn:
    """Parse ``[{from, rate}]``; ``strict`` enforces the scenario rules."""
    if not isinstance(pieces, list):
        raise FormatError(f"{where}: expected a list of pieces")
    out = []
    for i, piece in enumerate(pieces):
        at = f"{where}[{i}]"
        start = _r(_get(piece, "from", at), at + ".from")
        rate = _r(_get(piece, "rate", at), at + ".rate")
        if strict:
            if out and start <= out[-1][0]:
                raise FormatError(f"{at}.from: piece starts must be strictly increasing")
            if start < 0:
                raise FormatError(f"{at}.from: first piece must start at or after 0")
            if rate < 0:
                raise FormatError(f"{at}.rate: rates must be nonnegative")
        out.append((start, rate))
    try:
        return PiecewiseConstantFn.from_pieces(out)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def pcf_from_json(obj, where: str = "function") -> PiecewiseConstantFn:
    default = _r(_get(obj, "default", where), where + ".default")
    f = pieces_from_json(_get(obj, "pieces", where), where + ".pieces", strict=False)
    try:
        return PiecewiseConstantFn(f.breakpoints, f.values, default)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def pl_to_json(f: PiecewiseLinearFn) -> dict:
    return {
        "points": [[format_rational(b), format_rational(v)] for b, v in zip(f.breakpoints, f.values)],
        "slope_left": format_rational(f.slope_left),
        "slope_right": format_rational(f.slope_right),
    }


def pl_from_json(obj, where: str = "function") -> PiecewiseLinearFn:
    points = _get(obj, "points", where)
    if not isinstance(points, list) or not points:
        raise FormatError(f"{where}.points: expected a nonempty list")
    xs, ys = [], []
    for i, pt in enumerate(points):
        if not isinstance(pt, list) or len(pt) != 2:
            raise FormatError(f"{where}.points[{i}]: expected [theta, value]")
        xs.append(_r(pt[0], f"{where}.points[{i}][0]"))
        ys.append(_r(pt[1], f"{where}.points[{i}][1]"))
    try:
        return PiecewiseLinearFn(
            xs, ys, _r(_get(obj, "slope_left", where), where + ".slope_left"),
            _r(_get(obj, "slope_right", where), where + ".slope_right"),
        )
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def rational_map(d: dict) -> dict:
    return {k: format_rational(v) for k, v in sorted(d.items())}


def _rmap_from(obj, where: str) -> dict[str, Fraction]:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    return {k: _r(v, f"{where}.{k}") for k, v in obj.items()}


# --------------------------------------------------------------------------- network and scenario


def network_to_json(net: Network) -> dict:
    return {
        "nodes": list(net.nodes),
        "source": net.source,
        "sink": net.sink,
        "edges": [
            {
                "id": e.id,
                "tail": e.tail,
                "head": e.head,
                "capacity": format_rational(e.capacity),
                "latency": format_rational(e.latency),
            }
            for e in net.edges
        ],
    }


def network_from_json(obj, where: str = "network") -> Network:
    edges = []
    raw = _get(obj, "edges", where)
    if not isinstance(raw, list):
        raise FormatError(f"{where}.edges: expected a list")
    for i, e in enumerate(raw):
        at = f"{where}.edges[{i}]"
        edges.append(
            Edge(
                str(_get(e, "id", at)),
                str(_get(e, "tail", at)),
                str(_get(e, "head", at)),
                _r(_get(e, "capacity", at), at + ".capacity"),
                _r(_get(e, "latency", at), at + ".latency"),
            )
        )
    nodes = obj.get("nodes")
    if nodes is not None and not isinstance(nodes, list):
        raise FormatError(f"{where}.nodes: expected a list")
    return Network.build(
        [(e.id, e.tail, e.head, e.capacity, e.latency) for e in edges],
        str(_get(obj, "source", where)),
        str(_get(obj, "sink", where)),
        nodes=[str(v) for v in nodes] if nodes is not None else None,
    )


class Scenario:
    def __init__(self, network: Network, inflow: PiecewiseConstantFn, horizon: Fraction, path_flows: PathFlowSet | None = None):
        self.network = network
        self.inflow = inflow
        self.horizon = horizon
        self.path_flows = path_flows

    def __eq__(self, other):
        return isinstance(other, Scenario) and scenario_to_json(self) == scenario_to_json(other)


def path_flows_to_json(pf: PathFlowSet) -> list:
    return [
        {
            "id": pid,
            "path": list(pf.paths[pid]),
            "pieces": pcf_to_json(pf.rates[pid])["pieces"],
        }
        for pid in sorted(pf.paths)
    ]


def path_flows_from_json(raw, horizon: Fraction, where: str = "path_flows") -> PathFlowSet:
    if not isinstance(raw, list):
        raise FormatError(f"{where}: expected a list")
    paths, rates = {}, {}
    for i, item in enumerate(raw):
        at = f"{where}[{i}]"
        pid = str(item.get("id", f"P{i + 1}")) if isinstance(item, dict) else None
        path = _get(item, "path", at)
        if not isinstance(path, list):
            raise FormatError(f"{at}.path: expected a list of edge ids")
        if pid in paths:
            raise FormatError(f"{at}.id: duplicate path id {pid!r}")
        paths[pid] = tuple(str(e) for e in path)
        rates[pid] = pieces_from_json(_get(item, "pieces", at), at + ".pieces").cut(horizon)
    return PathFlowSet(paths, rates, horizon)


def scenario_to_json(sc: Scenario) -> dict:
    out: dict[str, Any] = {
        "format": FORMAT,
        "network": network_to_json(sc.network),
        "inflow": pcf_to_json(sc.inflow)["pieces"],
        "horizon": format_rational(sc.horizon),
    }
    if sc.path_flows is not None:
        out["path_flows"] = path_flows_to_json(sc.path_flows)
    return out


def _check_format(obj, where: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected a JSON object")
    if obj.get("format") != FORMAT:
        raise FormatError(f"{where}: unsupported or missing format (expected \"format\": {FORMAT})")


def scenario_from_json(obj, where: str = "scenario") -> Scenario:
    _check_format(obj, where)
    net = network_from_json(_get(obj, "network", where))
    inflow = pieces_from_json(obj.get("inflow", []), "inflow")
    horizon = _r(_get(obj, "horizon", where), "horizon")
    if horizon <= 0:
        raise FormatError("horizon: must be positive")
    pf = None
    if "path_flows" in obj:
        pf = path_flows_from_json(obj["path_flows"], horizon)
    return Scenario(net, inflow, horizon, pf)


def path_flow_file_to_json(pf: PathFlowSet) -> dict:
    return {"format": FORMAT, "horizon": format_rational(pf.horizon), "path_flows": path_flows_to_json(pf)}


def path_flow_file_from_json(obj, where: str = "path flows") -> PathFlowSet:
    _check_format(obj, where)
    horizon = _r(_get(obj, "horizon", where), "horizon")
    return path_flows_from_json(_get(obj, "path_flows", where), horizon)


# --------------------------------------------------------------------------- ntf


def ntf_instance_to_json(inst: NtfInstance) -> dict:
    return {
        "format": FORMAT,
        "network": network_to_json(inst.network),
        "active": sorted(inst.active),
        "resetting": sorted(inst.resetting),
        "inflow": format_rational(inst.inflow),
    }


def ntf_instance_from_json(obj, where: str = "instance") -> NtfInstance:
    _check_format(obj, where)
    net = network_from_json(_get(obj, "network", where))
    return NtfInstance(
        net,
        frozenset(str(e) for e in _get(obj, "active", where)),
        frozenset(str(e) for e in obj.get("resetting", [])),
        _r(_get(obj, "inflow", where), "inflow"),
    )


def ntf_solution_to_json(sol: NtfSolution) -> dict:
    return {"format": FORMAT, "flow": rational_map(sol.flow), "labels": rational_map(sol.labels)}


def ntf_solution_from_json(obj, where: str = "solution") -> NtfSolution:
    _check_format(obj, where)
    return NtfSolution(_rmap_from(_get(obj, "flow", where), "flow"), _rmap_from(_get(obj, "labels", where), "labels"))


# --------------------------------------------------------------------------- trajectories


def phase_to_json(p: Phase) -> dict:
    return {
        "start": format_rational(p.start),
        "end": fmt_time(p.end),
        "binding": {"kind": p.binding.kind, "edge": p.binding.edge},
        "inflow": format_rational(p.inflow),
        "active": sorted(p.active),
        "resetting": sorted(p.resetting),
        "labels_at_start": rational_map(p.labels_at_start),
        "flow": rational_map(p.flow),
        "label_slopes": rational_map(p.label_slopes),
    }


def phase_from_json(obj, where: str) -> Phase:
    b = _get(obj, "binding", where)
    return Phase(
        start=_r(_get(obj, "start", where), where + ".start"),
        end=parse_time(_get(obj, "end", where), where + ".end"),
        labels_at_start=_rmap_from(_get(obj, "labels_at_start", where), where + ".labels_at_start"),
        active=frozenset(_get(obj, "active", where)),
        resetting=frozenset(_get(obj, "resetting", where)),
        inflow=_r(_get(obj, "inflow", where), where + ".inflow"),
        flow=_rmap_from(_get(obj, "flow", where), where + ".flow"),
        label_slopes=_rmap_from(_get(obj, "label_slopes", where), where + ".label_slopes"),
        binding=Binding(_get(b, "kind", where + ".binding"), b.get("edge")),
    )


def phases_to_json(traj: EquilibriumTrajectory) -> dict:
    return {"format": FORMAT, "end": fmt_time(traj.end), "phases": [phase_to_json(p) for p in traj.phases]}


def trajectory_to_json(traj: EquilibriumTrajectory) -> dict:
    return {
        "format": FORMAT,
        "network": network_to_json(traj.network),
        "inflow": pcf_to_json(traj.inflow)["pieces"],
        "end": fmt_time(traj.end),
        "phases": [phase_to_json(p) for p in traj.phases],
        "labels": {v: pl_to_json(f) for v, f in sorted(traj.labels.items())},
        "cumulative": {e: pl_to_json(f) for e, f in sorted(traj.cumulative.items())},
        "queues": {e: pl_to_json(f) for e, f in sorted(traj.queues.items())},
        "inflow_rates": {e: pcf_to_json(f) for e, f in sorted(traj.inflow_rates.items())},
        "outflow_rates": {e: pcf_to_json(f) for e, f in sorted(traj.outflow_rates.items())},
    }


def _fn_map(obj, where: str, parse) -> dict:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    return {k: parse(v, f"{where}.{k}") for k, v in obj.items()}


def trajectory_from_json(obj, where: str = "trajectory") -> EquilibriumTrajectory:
    """Rebuild a trajectory exactly as stored, without recomputing anything."""
    _check_format(obj, where)
    phases = _get(obj, "phases", where)
    return EquilibriumTrajectory(
        network=network_from_json(_get(obj, "network", where)),
        inflow=pieces_from_json(_get(obj, "inflow", where), "inflow", strict=False),
        phases=[phase_from_json(p, f"phases[{i}]") for i, p in enumerate(phases)],
        end=parse_time(_get(obj, "end", where), "end"),
        labels=_fn_map(_get(obj, "labels", where), "labels", pl_from_json),
        cumulative=_fn_map(_get(obj, "cumulative", where), "cumulative", pl_from_json),
        inflow_rates=_fn_map(_get(obj, "inflow_rates", where), "inflow_rates", pcf_from_json),
        outflow_rates=_fn_map(_get(obj, "outflow_rates", where), "outflow_rates", pcf_from_json),
        queues=_fn_map(_get(obj, "queues", where), "queues", pl_from_json),
    )


# --------------------------------------------------------------------------- loading results


def loading_to_json(net: Network, pf: PathFlowSet, res: LoadingResult, node_labels: dict | None = None) -> dict:
    out = {
        "format": FORMAT,
        "network": network_to_json(net),
        "horizon": format_rational(pf.horizon),
        "path_flows": path_flows_to_json(pf),
        "bound": format_rational(res.bound),
        "rounds": res.rounds,
        "edge_inflow": {e: pcf_to_json(f) for e, f in sorted(res.edge_inflow.items())},
        "edge_outflow": {e: pcf_to_json(f) for e, f in sorted(res.edge_outflow.items())},
        "queue": {e: pl_to_json(f) for e, f in sorted(res.queue.items())},
        "exit_time": {e: pl_to_json(f) for e, f in sorted(res.exit_time.items())},
        "path_edge_flows": [
            {
                "path": pid,
                "edge": eid,
                "inflow": pcf_to_json(res.path_inflow[(pid, eid)]),
                "outflow": pcf_to_json(res.path_outflow[(pid, eid)]),
            }
            for pid, eid in sorted(res.path_inflow)
        ],
        "path_time": {p: pl_to_json(f) for p, f in sorted(res.path_time.items())},
    }
    if node_labels is not None:
        out["node_labels"] = {
            s: {v: pl_to_json(f) for v, f in sorted(labels.items())} for s, labels in sorted(node_labels.items())
        }
    return out


def loading_from_json(obj, where: str = "loading"):
    """Returns ``(network, path flows, result)`` exactly as stored."""
    _check_format(obj, where)
    net = network_from_json(_get(obj, "network", where))
    horizon = _r(_get(obj, "horizon", where), "horizon")
    pf = path_flows_from_json(_get(obj, "path_flows", where), horizon)
    path_in, path_out = {}, {}
    for i, item in enumerate(_get(obj, "path_edge_flows", where)):
        at = f"path_edge_flows[{i}]"
        key = (str(_get(item, "path", at)), str(_get(item, "edge", at)))
        path_in[key] = pcf_from_json(_get(item, "inflow", at), at + ".inflow")
        path_out[key] = pcf_from_json(_get(item, "outflow", at), at + ".outflow")
    res = LoadingResult(
        edge_inflow=_fn_map(_get(obj, "edge_inflow", where), "edge_inflow", pcf_from_json),
        edge_outflow=_fn_map(_get(obj, "edge_outflow", where), "edge_outflow", pcf_from_json),
        queue=_fn_map(_get(obj, "queue", where), "queue", pl_from_json),
        exit_time=_fn_map(_get(obj, "exit_time", where), "exit_time", pl_from_json),
        path_inflow=path_in,
        path_outflow=path_out,
        path_time=_fn_map(_get(obj, "path_time", where), "path_time", pl_from_json),
        bound=_r(_get(obj, "bound", where), "bound"),
        rounds=int(obj.get("rounds", 0)),
    )
    return net, pf, res


# --------------------------------------------------------------------------- reports


def violation_to_json(v: Violation) -> dict:
    at = [fmt_time(v.at[0]), fmt_time(v.at[1])] if isinstance(v.at, tuple) else fmt_time(v.at)
    return {
        "kind": v.kind,
        "where": v.where,
        "at": at,
        "lhs": format_rational(v.lhs),
        "relation": v.relation,
        "rhs": format_rational(v.rhs),
        "detail": v.detail,
    }


def violation_from_json(obj, where: str = "violation") -> Violation:
    at = _get(obj, "at", where)
    at = tuple(parse_time(a, where + ".at") for a in at) if isinstance(at, list) else parse_time(at, where + ".at")
    return Violation(
        _get(obj, "kind", where),
        _get(obj, "where", where),
        at,
        _r(_get(obj, "lhs", where), where + ".lhs"),
        _get(obj, "relation", where),
        _r(_get(obj, "rhs", where), where + ".rhs"),
        obj.get("detail", ""),
    )


def report_to_json(violations: list[Violation], cross: CrossCheckReport | None = None, error: str | None = None) -> dict:
    out: dict[str, Any] = {
        "format": FORMAT,
        "ok": not violations and (cross is None or cross.ok) and error is None,
        "violations": [violation_to_json(v) for v in violations],
    }
    if cross is not None:
        out["cross_check"] = {
            "horizon": format_rational(cross.horizon),
            "checked": [format_rational(t) for t in cross.checked],
            "mismatches": [
                {"node": v, "theta": format_rational(t), "trajectory": format_rational(a), "loading": format_rational(b)}
                for v, t, a, b in cross.mismatches
            ],
        }
    if error is not None:
        out["error"] = error
    return out


# --------------------------------------------------------------------------- files and CSV


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def function_rows(name: str, f) -> list[tuple[str, Fraction, Fraction]]:
    """One row per breakpoint; a function without breakpoints gets a row at 0."""
    pts = list(f.breakpoints) or [Fraction(0)]
    return [(name, b, f(b)) for b in pts]


def csv_text(functions: Iterable[tuple[str, Any]], with_float: bool = False) -> str:
    rows = []
    for name, f in functions:
        rows += function_rows(name, f)
    rows.sort(key=lambda r: (r[0], r[1]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "theta", "value"] + (["value_float_lossy"] if with_float else []))
    for name, theta, value in rows:
        row = [name, format_rational(theta), format_rational(value)]
        if with_float:
            row.append(repr(float(value)))
        w.writerow(row)
    return buf.getvalue()


def read_csv_rows(text: str) -> list[tuple[str, Fraction, Fraction]]:
    reader = csv.DictReader(io.StringIO(text))
    return [(r["id"], as_rational(r["theta"]), as_rational(r["value"])) for r in reader]
