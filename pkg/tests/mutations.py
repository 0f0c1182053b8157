"""Single local perturbations of an equilibrium trajectory."""

import dataclasses
import random
from fractions import Fraction as F

from thinflow.pwfn import PiecewiseConstantFn, PiecewiseLinearFn


def _copy(traj):
    return dataclasses.replace(
        traj,
        labels=dict(traj.labels),
        cumulative=dict(traj.cumulative),
        inflow_rates=dict(traj.inflow_rates),
        outflow_rates=dict(traj.outflow_rates),
        queues=dict(traj.queues),
    )


def scale_flow_value(traj, rng: random.Random):
    out = _copy(traj)
    busy = [e for e, f in sorted(traj.inflow_rates.items()) if any(v != 0 for v in f.values)]
    if not busy:
        return None
    e = rng.choice(busy)
    f = traj.inflow_rates[e]
    i = rng.choice([k for k, v in enumerate(f.values) if v != 0])
    vals = list(f.values)
    vals[i] *= rng.choice([F(1, 2), F(2), F(3, 2)])
    out.inflow_rates[e] = PiecewiseConstantFn(f.breakpoints, vals, f.default)
    return f"scale inflow piece {i} of {e}", out


def shift_label_breakpoint(traj, rng: random.Random):
    out = _copy(traj)
    v = rng.choice(sorted(traj.labels))
    f = traj.labels[v]
    i = rng.randrange(len(f.breakpoints))
    bps = list(f.breakpoints)
    lo = bps[i - 1] if i > 0 else bps[i] - 1
    hi = bps[i + 1] if i + 1 < len(bps) else bps[i] + 1
    bps[i] = bps[i] + (hi - bps[i]) / 3 if rng.random() < 0.5 else bps[i] - (bps[i] - lo) / 3
    out.labels[v] = PiecewiseLinearFn(bps, f.values, f.slope_left, f.slope_right)
    return f"shift breakpoint {i} of label {v}", out


MUTATIONS = [scale_flow_value, shift_label_breakpoint]


def mutate(traj, rng: random.Random):
    for m in rng.sample(MUTATIONS, len(MUTATIONS)):
        result = m(traj, rng)
        if result is not None:
            return result
    raise AssertionError("no applicable mutation")
