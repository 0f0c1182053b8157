"""Exact dynamic equilibria in fluid-queue networks via normalized thin flows."""

from .engine import EquilibriumTrajectory, solve_equilibrium
from .loading import PathFlowSet, load
from .netmodel import Network
from .ntf import NtfInstance, find_ntf
from .pwfn import PiecewiseConstantFn, PiecewiseLinearFn
from .verify import check_equilibrium, check_feasible, cross_check

__version__ = "0.1.0"

__all__ = [
    "EquilibriumTrajectory",
    "Network",
    "NtfInstance",
    "PathFlowSet",
    "PiecewiseConstantFn",
    "PiecewiseLinearFn",
    "check_equilibrium",
    "check_feasible",
    "cross_check",
    "find_ntf",
    "load",
    "solve_equilibrium",
]
