"""Command-line front end: ``thinflow {solve,ntf,load,verify,decompose,gen}``."""

from __future__ import annotations

import argparse
import logging
import random
import sys
from pathlib import Path

from . import engine, formats, generate, loading, ntf, verify
from .formats import FormatError
from .netmodel import validate
from .pwfn import as_rational

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT = 2
EXIT_FAILURE = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_scenario(path, require_reachable: bool = True) -> formats.Scenario:
    try:
        sc = formats.scenario_from_json(formats.read_json(path))
    except (FormatError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from None
    problems = validate(sc.network, require_reachable)
    if problems:
        raise CliError(f"{path}: invalid network: " + "; ".join(problems))
    return sc


def _emit(args, obj) -> None:
    text = formats.dumps(obj)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------- commands


def cmd_solve(args) -> int:
    sc = _load_scenario(args.scenario)
    horizon = as_rational(args.horizon) if args.horizon is not None else sc.horizon
    out = _out_dir(args.out)
    traj = engine.solve_equilibrium(sc.network, sc.inflow, horizon, phase_cap=args.phase_cap)
    write_trajectory(out, traj, args.float)
    return EXIT_OK


def write_trajectory(out: Path, traj, with_float: bool = False) -> None:
    formats.write_json(out / "trajectory.json", formats.trajectory_to_json(traj))
    formats.write_json(out / "phases.json", formats.phases_to_json(traj))
    (out / "labels.csv").write_text(formats.csv_text(sorted(traj.labels.items()), with_float))
    (out / "queues.csv").write_text(formats.csv_text(sorted(traj.queues.items()), with_float))
    (out / "flows.csv").write_text(formats.csv_text(sorted(traj.cumulative.items()), with_float))
    rates = [(f"{e}:in", f) for e, f in traj.inflow_rates.items()]
    rates += [(f"{e}:out", f) for e, f in traj.outflow_rates.items()]
    (out / "rates.csv").write_text(formats.csv_text(sorted(rates), with_float))


def cmd_ntf(args) -> int:
    try:
        inst = formats.ntf_instance_from_json(formats.read_json(args.instance))
    except (FormatError, ValueError) as exc:
        raise CliError(f"{args.instance}: {exc}") from None
    if args.all:
        labels = ntf.enumerate_all_ntf_labels(inst, edge_cap=args.ntf_edge_cap)
        _emit(args, {"format": formats.FORMAT, "labels": [formats.rational_map(l) for l in labels]})
    else:
        _emit(args, formats.ntf_solution_to_json(ntf.find_ntf(inst)))
    return EXIT_OK


def cmd_load(args) -> int:
    sc = _load_scenario(args.scenario, require_reachable=False)
    if args.paths:
        try:
            pf = formats.path_flow_file_from_json(formats.read_json(args.paths))
        except (FormatError, ValueError) as exc:
            raise CliError(f"{args.paths}: {exc}") from None
    elif sc.path_flows is not None:
        pf = sc.path_flows
    else:
        raise CliError(f"{args.scenario}: no path_flows in scenario and no --paths file given")
    out = _out_dir(args.out)
    res = loading.load(sc.network, pf)
    per_path, node_labels, od = loading.path_times(sc.network, res, pf)
    formats.write_json(out / "loading.json", formats.loading_to_json(sc.network, pf, res, node_labels))
    f = args.float
    (out / "path_times.csv").write_text(formats.csv_text(sorted(per_path.items()), f))
    (out / "od_times.csv").write_text(formats.csv_text(sorted((f"{s}>{t}", fn) for (s, t), fn in od.items()), f))
    labels = [(f"{s}>{v}", fn) for s, m in node_labels.items() for v, fn in m.items()]
    (out / "labels.csv").write_text(formats.csv_text(sorted(labels), f))
    (out / "queues.csv").write_text(formats.csv_text(sorted(res.queue.items()), f))
    (out / "exit_times.csv").write_text(formats.csv_text(sorted(res.exit_time.items()), f))
    rates = [(f"{e}:in", fn) for e, fn in res.edge_inflow.items()]
    rates += [(f"{e}:out", fn) for e, fn in res.edge_outflow.items()]
    (out / "rates.csv").write_text(formats.csv_text(sorted(rates), f))
    return EXIT_OK


def cmd_verify(args) -> int:
    if bool(args.trajectory) == bool(args.loading):
        raise CliError("verify needs exactly one of --trajectory or --loading")
    source = args.trajectory or args.loading
    try:
        obj = formats.read_json(source)
        if args.trajectory:
            traj = formats.trajectory_from_json(obj)
        else:
            net, pf, res = formats.loading_from_json(obj)
    except (FormatError, ValueError) as exc:
        raise CliError(f"{source}: {exc}") from None
    cross, error = None, None
    if args.trajectory:
        net = traj.network
        found = verify.check_feasible(net, traj) + verify.check_equilibrium(net, traj)
        if not args.no_cross_check:
            try:
                horizon = as_rational(args.horizon) if args.horizon is not None else None
                cross = verify.cross_check(net, traj.inflow, traj, horizon)
            except (loading.LoadingError, engine.EngineError, ValueError) as exc:
                error = f"cross check failed: {exc}"
    else:
        found = verify.check_feasible(net, res, pf) + verify.check_capacity_operation(net, res)
    report = formats.report_to_json(found, cross, error)
    _emit(args, report)
    for v in found:
        print(f"{v.kind} at {v.where}: {v.detail}", file=sys.stderr)
    return EXIT_OK if report["ok"] else EXIT_VIOLATIONS


def cmd_decompose(args) -> int:
    try:
        traj = formats.trajectory_from_json(formats.read_json(args.trajectory))
    except (FormatError, ValueError) as exc:
        raise CliError(f"{args.trajectory}: {exc}") from None
    horizon = as_rational(args.horizon) if args.horizon is not None else None
    pf = verify.trajectory_path_flows(traj.network, traj, horizon)
    _emit(args, formats.path_flow_file_to_json(pf))
    return EXIT_OK


def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    if args.kind == "scenario":
        obj = formats.scenario_to_json(generate.random_scenario(rng))
    elif args.kind == "loading":
        obj = formats.scenario_to_json(generate.random_loading_scenario(rng))
    else:
        obj = formats.ntf_instance_to_json(generate.random_ntf_instance(rng))
    _emit(args, obj)
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thinflow", description="Exact dynamic equilibria via thin flows with resetting.")
    p.add_argument("-v", "--verbose", action="store_true", help="log each phase")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute the equilibrium trajectory of a scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--horizon", help="override the scenario horizon")
    s.add_argument("--phase-cap", type=int, default=engine.DEFAULT_PHASE_CAP)
    s.add_argument("--float", action="store_true", help="add a lossy decimal column to CSV files")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("ntf", help="solve one normalized thin flow instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--out", help="output file (default: stdout)")
    s.add_argument("--all", action="store_true", help="enumerate all label vectors instead")
    s.add_argument("--ntf-edge-cap", type=int, default=ntf.DEFAULT_EDGE_CAP)
    s.set_defaults(func=cmd_ntf)

    s = sub.add_parser("load", help="network loading of path inflows")
    s.add_argument("--scenario", required=True)
    s.add_argument("--paths", help="path-flow file (default: path_flows of the scenario)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--float", action="store_true", help="add a lossy decimal column to CSV files")
    s.set_defaults(func=cmd_load)

    s = sub.add_parser("verify", help="check a trajectory or a loading result")
    s.add_argument("--trajectory")
    s.add_argument("--loading")
    s.add_argument("--horizon", help="cross-check horizon for trajectories")
    s.add_argument("--no-cross-check", action="store_true")
    s.add_argument("--out", help="report file (default: stdout)")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("decompose", help="path flows of a trajectory")
    s.add_argument("--trajectory", required=True)
    s.add_argument("--horizon")
    s.add_argument("--out", help="output file (default: stdout)")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("gen", help="random scenario or instance")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--kind", choices=["scenario", "loading", "ntf"], default="scenario")
    s.add_argument("--out", help="output file (default: stdout)")
    s.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (engine.PhaseAccumulationError, engine.EngineError, loading.LoadingError, ntf.NtfSearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
