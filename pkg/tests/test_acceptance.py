"""Acceptance criteria 1-8, exact arithmetic throughout.

Run under pytest, or directly with ``python3 tests/test_acceptance.py`` for
the summary lines alone. ``--emit DIR`` writes the output files compared by
criterion 8.
"""

import os
import subprocess
import sys
import tempfile
import time
from fractions import Fraction as F
from pathlib import Path
from random import Random

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import two_route_inflow, two_route_network, parallel_network  # noqa: E402
from mutations import mutate  # noqa: E402
from oracles import grid_thin_flows  # noqa: E402
from thinflow import formats  # noqa: E402
from thinflow.engine import solve_equilibrium  # noqa: E402
from thinflow.generate import random_network, random_ntf_instance, random_path_flows, random_scenario  # noqa: E402
from thinflow.loading import load, support_bound  # noqa: E402
from thinflow.ntf import NtfInstance, enumerate_all_ntf_labels, find_ntf  # noqa: E402
from thinflow.pwfn import INF, PiecewiseConstantFn, PiecewiseLinearFn, integrate  # noqa: E402
from thinflow.verify import check_capacity_operation, check_equilibrium, check_feasible, cross_check  # noqa: E402

N_NTF, N_SCENARIOS, N_LOADINGS, N_MUTANTS = 200, 100, 100, 50
PHASE_CAP = 1000


def ntf_seed(i):
    return 10_000 + i


def scenario_seed(i):
    return 20_000 + i


def loading_seed(i):
    return 30_000 + i


def mutant_seed(i):
    return 40_000 + i


# --------------------------------------------------------------------- workloads


def criterion_1(out=None):
    net, u = two_route_network(), two_route_inflow()
    traj = solve_equilibrium(net, u, 5)
    lr = traj.labels["r"]
    problems = []
    if lr != PiecewiseLinearFn([0, 1, 2], [1, 3, 3], 1, 1):
        problems.append(f"l_r = {lr}")
    if traj.labels["t"] != lr + 1:
        problems.append("l_t != l_r + 1")
    if traj.outflow_rates["a"] != PiecewiseConstantFn.from_pieces([(1, 1)]):
        problems.append(f"f_a^- = {traj.outflow_rates['a']}")
    if traj.inflow_rates["c"] != PiecewiseConstantFn.zero() or traj.cumulative["c"] != PiecewiseLinearFn.zero():
        problems.append("edge c carries flow")
    if out:
        formats.write_json(out / "c1_trajectory.json", formats.trajectory_to_json(traj))
    return problems


def criterion_2(out=None):
    problems = []
    results = {}
    for u0, want in ((3, F(1)), (4, F(4, 3))):
        inst = NtfInstance(parallel_network(), frozenset({"e1", "e2"}), frozenset(), u0)
        sol = find_ntf(inst)
        results[u0] = sol
        grid = {lab["t"] for _, lab in grid_thin_flows(inst.network, inst.active, inst.resetting, u0)}
        if sol.labels["t"] != want or grid != {want}:
            problems.append(f"u0={u0}: l'_t={sol.labels['t']}, grid oracle {grid}")
    if out:
        for u0, sol in results.items():
            formats.write_json(out / f"c2_ntf_{u0}.json", formats.ntf_solution_to_json(sol))
    return problems


def criterion_3(out=None):
    problems = []
    lines = []
    for i in range(N_NTF):
        inst = random_ntf_instance(Random(ntf_seed(i)))
        assert len(inst.network.nodes) <= 6 and len(inst.network.edges) <= 10
        labels = enumerate_all_ntf_labels(inst)
        if len(labels) != 1:
            problems.append(f"seed {ntf_seed(i)}: {len(labels)} label vectors")
        lines.append(formats.dumps({"seed": ntf_seed(i), "labels": [formats.rational_map(l) for l in labels]}))
    if out:
        (out / "c3_labels.jsonl").write_text("".join(lines))
    return problems


def _scenario_trajectories():
    for i in range(N_SCENARIOS):
        sc = random_scenario(Random(scenario_seed(i)))
        yield i, sc, solve_equilibrium(sc.network, sc.inflow, sc.horizon, phase_cap=PHASE_CAP)


def criterion_4(out=None):
    problems = []
    for i, sc, traj in _scenario_trajectories():
        found = check_feasible(sc.network, traj) + check_equilibrium(sc.network, traj)
        if found:
            problems.append(f"seed {scenario_seed(i)}: {found[0]}")
        if out:
            formats.write_json(out / f"c4_trajectory_{i:03d}.json", formats.trajectory_to_json(traj))
    return problems


def criterion_5(out=None):
    problems = []
    for i, sc, traj in _scenario_trajectories():
        report = cross_check(sc.network, sc.inflow, traj, sc.horizon)
        if not report.ok:
            problems.append(f"seed {scenario_seed(i)}: first mismatch {report.first}")
        if out:
            formats.write_json(out / f"c5_report_{i:03d}.json", formats.report_to_json([], report))
    return problems


def criterion_6(out=None):
    problems = []
    for i in range(N_LOADINGS):
        rng = Random(loading_seed(i))
        net = random_network(rng)
        pf = random_path_flows(rng, net)
        res = load(net, pf)
        found = check_capacity_operation(net, res) + check_feasible(net, res, pf)
        bound = support_bound(net, pf)
        for (pid, eid), f in sorted(res.path_inflow.items()):
            mass = integrate(pf.rates[pid])(pf.horizon)
            g = res.path_outflow[(pid, eid)]
            if integrate(f)(bound) != mass or integrate(g)(bound) != mass:
                found.append(f"mass of {pid} not conserved on {eid}")
            if f.support_end() > bound or g.support_end() > bound:
                found.append(f"flow of {pid} on {eid} beyond M={bound}")
        if found:
            problems.append(f"seed {loading_seed(i)}: {found[0]}")
        if out:
            formats.write_json(out / f"c6_loading_{i:03d}.json", formats.loading_to_json(net, pf, res))
    return problems


def criterion_7(out=None):
    problems = []
    for i in range(N_MUTANTS):
        rng = Random(mutant_seed(i))
        sc = random_scenario(rng)
        traj = solve_equilibrium(sc.network, sc.inflow, sc.horizon, phase_cap=PHASE_CAP)
        what, bad = mutate(traj, rng)
        found = check_feasible(sc.network, bad) + check_equilibrium(sc.network, bad)
        if not found:
            problems.append(f"seed {mutant_seed(i)}: {what} went unnoticed")
        elif not all(v.reproduces() for v in found):
            problems.append(f"seed {mutant_seed(i)}: a violation does not reproduce")
    return problems


EMITTERS = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6]


def emit(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for fn in EMITTERS:
        fn(out)


def criterion_8(out=None):
    problems = []
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "run1", Path(tmp) / "run2"]
        for d, hashseed in zip(dirs, ("1", "2")):
            env = {**os.environ, "PYTHONHASHSEED": hashseed}
            subprocess.run([sys.executable, __file__, "--emit", str(d)], check=True, env=env)
        names = sorted(p.name for p in dirs[0].iterdir())
        if names != sorted(p.name for p in dirs[1].iterdir()):
            problems.append("runs wrote different file sets")
        for name in names:
            if (dirs[0] / name).read_bytes() != (dirs[1] / name).read_bytes():
                problems.append(f"{name} differs between runs")
        if len(names) != 1 + 2 + 1 + 3 * N_SCENARIOS:
            problems.append(f"only {len(names)} files emitted")
    return problems


CRITERIA = {
    1: ("two-route golden trajectory", criterion_1, 1),
    2: ("parallel-edge thin flows vs grid oracle", criterion_2, 1),
    3: ("label uniqueness on 200 random instances", criterion_3, 300),
    4: ("equilibrium certification on 100 scenarios", criterion_4, 300),
    5: ("loading cross-check on 100 scenarios", criterion_5, None),
    6: ("loading invariants on 100 path-flow sets", criterion_6, None),
    7: ("metamorphic rejection of 50 mutants", criterion_7, None),
    8: ("byte-identical outputs of criteria 1-6", criterion_8, None),
}


def run(number):
    title, fn, limit = CRITERIA[number]
    start = time.perf_counter()
    problems = fn()
    elapsed = time.perf_counter() - start
    if limit is not None and elapsed >= limit:
        problems = problems + [f"took {elapsed:.2f}s, limit {limit}s"]
    status = "PASS" if not problems else "FAIL"
    line = f"{status} criterion {number}: {title} ({elapsed:.2f}s)"
    if problems:
        line += " -- " + "; ".join(problems[:3])
    return not problems, line


# --------------------------------------------------------------------- pytest entry points


def _check(number, capsys):
    ok, line = run(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def test_criterion_1(capsys):
    _check(1, capsys)


def test_criterion_2(capsys):
    _check(2, capsys)


def test_criterion_3(capsys):
    _check(3, capsys)


def test_criterion_4(capsys):
    _check(4, capsys)


def test_criterion_5(capsys):
    _check(5, capsys)


def test_criterion_6(capsys):
    _check(6, capsys)


def test_criterion_7(capsys):
    _check(7, capsys)


def test_criterion_8(capsys):
    _check(8, capsys)


if __name__ == "__main__":
    if len(sys.argv) == 3 and sys.argv[1] == "--emit":
        emit(Path(sys.argv[2]))
        sys.exit(0)
    results = [run(n) for n in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
