import dataclasses
import random
from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import two_route_inflow, two_route_network
from mutations import mutate
from oracles import dense_grid
from thinflow.engine import solve_equilibrium
from thinflow.generate import random_network, random_path_flows, random_scenario
from thinflow.loading import LoadingResult, PathFlowSet, load
from thinflow.netmodel import Network
from thinflow.pwfn import PiecewiseConstantFn, PiecewiseLinearFn
from thinflow.verify import (
    Violation,
    _first_negative,
    _mismatches,
    check_capacity_operation,
    check_equilibrium,
    check_feasible,
    cross_check,
    trajectory_path_flows,
)

PC = PiecewiseConstantFn


def two_route_traj():
    return solve_equilibrium(two_route_network(), two_route_inflow(), 5)


def test_two_route_is_feasible_equilibrium():
    net, traj = two_route_network(), two_route_traj()
    assert check_feasible(net, traj) == []
    assert check_equilibrium(net, traj) == []


def single_edge_result(inflow, outflow):
    net = Network.build([("e", "s", "t", 1, 1)], "s", "t")
    res = LoadingResult(
        edge_inflow={"e": inflow},
        edge_outflow={"e": outflow},
        queue={"e": PiecewiseLinearFn.zero()},
        exit_time={"e": PiecewiseLinearFn.affine(1, 1)},
        path_inflow={("P", "e"): inflow},
        path_outflow={("P", "e"): outflow},
        path_time={"P": PiecewiseLinearFn.affine(1, 1)},
        bound=F(10),
    )
    return net, res


def test_capacity_violation_hand_built():
    net, res = single_edge_result(PC.from_pieces([(0, 2), (1, 0)]), PC.from_pieces([(1, 2), (2, 0)]))
    found = check_feasible(net, res)
    assert [v.kind for v in found] == ["capacity"]
    assert found[0].lhs == 2 and found[0].rhs == 1 and found[0].reproduces()


def test_outflow_before_inflow_is_a_deficit():
    net, res = single_edge_result(PC.from_pieces([(2, 1), (3, 0)]), PC.from_pieces([(1, 1), (2, 0)]))
    kinds = [v.kind for v in check_feasible(net, res)]
    assert kinds == ["non-deficit"]


def test_flow_diverted_to_slow_edge():
    net, traj = two_route_network(), two_route_traj()
    bad = dataclasses.replace(traj, inflow_rates=dict(traj.inflow_rates))
    bad.inflow_rates["c"] = PC.from_pieces([(3, F(1, 2))])
    found = check_equilibrium(net, bad)
    assert any(v.kind == "inactive-inflow" and v.where == "c" for v in found)
    assert all(v.reproduces() for v in found)


def test_zero_inflow_trajectory_passes():
    net = two_route_network()
    traj = solve_equilibrium(net, PC.zero(), 4)
    assert check_feasible(net, traj) == [] and check_equilibrium(net, traj) == []


def test_phase_sets_must_match_labels():
    net, traj = two_route_network(), two_route_traj()
    p = dataclasses.replace(traj.phases[1], resetting=frozenset())
    bad = dataclasses.replace(traj, phases=[traj.phases[0], p, traj.phases[2]])
    found = check_equilibrium(net, bad)
    assert [(v.kind, v.where, v.at) for v in found] == [("label-recursion", "a", 1)]
    assert found[0].reproduces()


def test_capacity_operation_examples():
    rng = random.Random(4)
    net = random_network(rng)
    pf = random_path_flows(rng, net)
    res = load(net, pf)
    assert check_capacity_operation(net, res) == []
    queued = [e for e, z in sorted(res.queue.items()) if z != PiecewiseLinearFn.zero()]
    assert queued
    doubled = dataclasses.replace(res, queue={**res.queue, queued[0]: res.queue[queued[0]].scale(2)})
    found = check_capacity_operation(net, doubled)
    assert found and all("(c)" in v.detail for v in found)
    e = net.edges[0]
    over = dataclasses.replace(res, edge_outflow={**res.edge_outflow, e.id: res.edge_outflow[e.id] + PC.from_pieces([(50, e.capacity + 1), (51, 0)])})
    found = check_capacity_operation(net, over)
    assert any("(a)" in v.detail for v in found)


def test_cross_check_examples():
    net, u = two_route_network(), two_route_inflow()
    report = cross_check(net, u, two_route_traj())
    assert report.ok and {F(0), F(1), F(2)} <= set(report.checked)
    zero = solve_equilibrium(net, PC.zero(), 3)
    assert cross_check(net, PC.zero(), zero).ok
    for seed in range(10):
        sc = random_scenario(random.Random(700 + seed))
        traj = solve_equilibrium(sc.network, sc.inflow, sc.horizon)
        assert cross_check(sc.network, sc.inflow, traj, sc.horizon).ok


def test_cross_check_reports_first_mismatch():
    net, u = two_route_network(), two_route_inflow()
    traj = two_route_traj()
    bad = dataclasses.replace(traj, labels={**traj.labels, "t": traj.labels["t"] + 1})
    report = cross_check(net, u, bad)
    assert not report.ok and report.first[:2] == ("t", 0)


def test_trajectory_path_flows_two_route():
    pf = trajectory_path_flows(two_route_network(), two_route_traj(), F(3))
    assert pf.paths == {"a/b": ("a", "b")}
    assert pf.rates["a/b"] == two_route_inflow().cut(3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_mutations_are_rejected_and_reproducible(seed):
    rng = random.Random(seed)
    sc = random_scenario(rng)
    traj = solve_equilibrium(sc.network, sc.inflow, sc.horizon)
    what, bad = mutate(traj, rng)
    found = check_feasible(sc.network, bad) + check_equilibrium(sc.network, bad)
    assert found, what
    assert all(v.reproduces() for v in found)


# --------------------------------------------------------------------- grid completeness

pieces = st.lists(
    st.tuples(st.fractions(-6, 6, max_denominator=4), st.fractions(-3, 3, max_denominator=3)), min_size=1, max_size=4
)


def pl_from(points, left, right):
    pts = sorted(dict(points).items())
    return PiecewiseLinearFn([p for p, _ in pts], [v for _, v in pts], left, right)


slopes = st.fractions(-2, 2, max_denominator=2)


@settings(max_examples=150)
@given(pieces, pieces, slopes, slopes, slopes, slopes)
def test_breakpoint_grid_agrees_with_dense_sampling(p, q, a, b, c, d):
    f, g = pl_from(p, a, b), pl_from(q, c, d)
    reported = list(_mismatches(f, g))
    dense = [t for t in dense_grid(-40, 40, 12) if f(t) != g(t)]
    assert bool(reported) == bool(dense)
    assert all(f(t) != g(t) for t in reported)


@settings(max_examples=150)
@given(pieces, slopes, slopes)
def test_negativity_check_agrees_with_dense_sampling(p, a, b):
    f = pl_from(p, a, b)
    theta = _first_negative(f)
    dense = [t for t in dense_grid(-40, 40, 12) if f(t) < 0]
    if theta is not None:
        assert f(theta) < 0
    else:
        assert not dense


def test_violation_reproduces():
    assert Violation("capacity", "e", F(0), F(2), "<=", F(1)).reproduces()
    assert not Violation("capacity", "e", F(0), F(1), "<=", F(1)).reproduces()
