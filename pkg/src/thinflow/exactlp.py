"""Two-phase primal simplex over the rationals with Bland's pivoting rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .pwfn import as_rational

RELATIONS = ("<=", "==", ">=")


class LpInputError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[str, Fraction]
    relation: str
    rhs: Fraction

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise LpInputError(f"unknown relation {self.relation!r}")
        object.__setattr__(self, "coeffs", {k: as_rational(v) for k, v in self.coeffs.items()})
        object.__setattr__(self, "rhs", as_rational(self.rhs))

    def lhs(self, point: Mapping[str, Fraction]) -> Fraction:
        return sum((c * point.get(v, 0) for v, c in self.coeffs.items()), Fraction(0))

    def satisfied_by(self, point: Mapping[str, Fraction]) -> bool:
        lhs = self.lhs(point)
        if self.relation == "<=":
            return lhs <= self.rhs
        if self.relation == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass
class LinearProgram:
    """Maximize ``objective`` subject to ``constraints``.

    ``nonneg`` lists the sign-constrained variables; ``None`` means all of them.
    """

    variables: list[str]
    objective: Mapping[str, Fraction]
    constraints: list[Constraint] = field(default_factory=list)
    nonneg: frozenset[str] | None = None

    def nonneg_vars(self) -> frozenset[str]:
        return frozenset(self.variables) if self.nonneg is None else frozenset(self.nonneg)

    def add(self, coeffs: Mapping[str, Fraction], relation: str, rhs) -> None:
        self.constraints.append(Constraint(dict(coeffs), relation, rhs))

    def is_feasible_point(self, point: Mapping[str, Fraction]) -> bool:
        if any(point.get(v, 0) < 0 for v in self.nonneg_vars()):
            return False
        return all(c.satisfied_by(point) for c in self.constraints)

    def objective_value(self, point: Mapping[str, Fraction]) -> Fraction:
        return sum((as_rational(c) * point.get(v, 0) for v, c in self.objective.items()), Fraction(0))


@dataclass(frozen=True)
class LpOutcome:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None = None
    assignment: dict[str, Fraction] | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _check(lp: LinearProgram) -> None:
    declared = set(lp.variables)
    if len(declared) != len(lp.variables):
        raise LpInputError("duplicate variable names")
    for name in lp.objective:
        if name not in declared:
            raise LpInputError(f"objective uses undeclared variable {name!r}")
    for i, con in enumerate(lp.constraints):
        for name in con.coeffs:
            if name not in declared:
                raise LpInputError(f"constraint {i} uses undeclared variable {name!r}")
    if lp.nonneg is not None and not set(lp.nonneg) <= declared:
        raise LpInputError("nonneg names undeclared variables")


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, j: int) -> None:
        row = self.rows[r]
        p = row[j]
        if p != 1:
            row = [a / p for a in row]
            self.rows[r] = row
            self.rhs[r] /= p
        nz = [k for k, a in enumerate(row) if a]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[j]
            if f:
                for k in nz:
                    other[k] -= f * row[k]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = j

    def run(self, cost: list[Fraction], allowed: int) -> str:
        """Maximize ``cost . x`` using columns ``< allowed`` as entering candidates."""
        n = len(cost)
        reduced = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for k in range(n):
                    if row[k]:
                        reduced[k] -= cb * row[k]
        while True:
            entering = next((j for j in range(allowed) if reduced[j] > 0), None)
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and self.basis[i] < self.basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return "unbounded"
            r = best[1]
            self.pivot(r, entering)
            f = reduced[entering]
            row = self.rows[r]
            for k in range(n):
                if row[k]:
                    reduced[k] -= f * row[k]


def solve(lp: LinearProgram) -> LpOutcome:
    _check(lp)
    nonneg = lp.nonneg_vars()
    # structural columns; free variables are split into a positive and negative part
    columns: list[tuple[str, int]] = []
    for v in lp.variables:
        columns.append((v, 1))
        if v not in nonneg:
            columns.append((v, -1))
    n_struct = len(columns)
    col_index: dict[str, list[tuple[int, int]]] = {}
    for k, (v, sign) in enumerate(columns):
        col_index.setdefault(v, []).append((k, sign))

    m = len(lp.constraints)
    n_slack = sum(1 for c in lp.constraints if c.relation != "==")
    n_art = sum(1 for c in lp.constraints if c.relation != "<=" or c.rhs < 0)
    width = n_struct + n_slack + n_art
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    basis: list[int] = []
    slack_at = n_struct
    art_at = n_struct + n_slack
    for con in lp.constraints:
        row = [Fraction(0)] * width
        for v, c in con.coeffs.items():
            for k, sign in col_index[v]:
                row[k] += sign * c
        b = con.rhs
        rel = con.relation
        if rel != "==":
            row[slack_at] = Fraction(1) if rel == "<=" else Fraction(-1)
            slack_col = slack_at
            slack_at += 1
        if b < 0:
            row = [-a for a in row]
            b = -b
        if rel == "<=" and con.rhs >= 0:
            basis.append(slack_col)
        else:
            row[art_at] = Fraction(1)
            basis.append(art_at)
            art_at += 1
        rows.append(row)
        rhs.append(b)

    tab = _Tableau(rows, rhs, basis)
    first_art = n_struct + n_slack
    if n_art:
        phase1 = [Fraction(0)] * first_art + [Fraction(-1)] * n_art
        tab.run(phase1, width)
        infeasibility = sum((tab.rhs[i] for i, b in enumerate(tab.basis) if b >= first_art), Fraction(0))
        if infeasibility > 0:
            return LpOutcome("infeasible")
        # drive zero-valued artificials out of the basis; drop redundant rows
        keep = []
        for i in range(len(tab.rows)):
            if tab.basis[i] >= first_art:
                j = next((k for k in range(first_art) if tab.rows[i][k] != 0), None)
                if j is None:
                    continue
                tab.pivot(i, j)
            keep.append(i)
        tab.rows = [tab.rows[i][:first_art] for i in keep]
        tab.rhs = [tab.rhs[i] for i in keep]
        tab.basis = [tab.basis[i] for i in keep]
    cost = [Fraction(0)] * first_art
    for k, (v, sign) in enumerate(columns):
        cost[k] = sign * as_rational(lp.objective.get(v, 0))
    status = tab.run(cost, first_art)
    if status == "unbounded":
        return LpOutcome("unbounded")
    x = [Fraction(0)] * first_art
    for i, b in enumerate(tab.basis):
        x[b] = tab.rhs[i]
    assignment = {v: Fraction(0) for v in lp.variables}
    for k, (v, sign) in enumerate(columns):
        assignment[v] += sign * x[k]
    value = lp.objective_value(assignment)
    return LpOutcome("optimal", value, assignment)


def dual(lp: LinearProgram) -> LinearProgram:
    """Mechanical LP dual written as a maximization.

    If the primal optimum is ``z`` the returned program has optimum ``-z``.
    """
    _check(lp)
    nonneg = lp.nonneg_vars()
    names = [f"y{i}" for i in range(len(lp.constraints))]
    # y_i >= 0 for <=, y_i <= 0 for >= (stored negated), free for ==
    signs = []
    for con in lp.constraints:
        signs.append(-1 if con.relation == ">=" else 1)
    free = {names[i] for i, con in enumerate(lp.constraints) if con.relation == "=="}
    d = LinearProgram(
        variables=names,
        objective={names[i]: -signs[i] * con.rhs for i, con in enumerate(lp.constraints)},
        nonneg=frozenset(n for n in names if n not in free),
    )
    for v in lp.variables:
        coeffs = {}
        for i, con in enumerate(lp.constraints):
            a = con.coeffs.get(v, 0)
            if a:
                coeffs[names[i]] = signs[i] * a
        d.add(coeffs, ">=" if v in nonneg else "==", lp.objective.get(v, 0))
    return d
