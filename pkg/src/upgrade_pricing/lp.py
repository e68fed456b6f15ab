#!/usr/bin/env python3
"""
Exact rational linear programming: a two-phase tableau simplex with Bland's
rule over numpy object arrays of Fractions, plus builders for the revenue
LP over all direct mechanisms and the transfer LP for a fixed allocation.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import LpError
from .model import Instance, Mechanism, dot
from .rational import ONE, ZERO, format_rational

logger = logging.getLogger(__name__)


class Relation(Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Variable:
    name: str
    lower: Optional[Fraction] = ZERO
    upper: Optional[Fraction] = None

    @property
    def is_free(self) -> bool:
        return self.lower is None and self.upper is None


@dataclass(frozen=True)
class Constraint:
    name: str
    coefficients: Tuple[Fraction, ...]
    relation: Relation
    rhs: Fraction

    def activity(self, x: Sequence[Fraction]) -> Fraction:
        return sum((a * v for a, v in zip(self.coefficients, x)), ZERO)

    def satisfied_by(self, x: Sequence[Fraction]) -> bool:
        lhs = self.activity(x)
        if self.relation is Relation.LE:
            return lhs <= self.rhs
        if self.relation is Relation.GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective . x subject to rows and variable bounds."""
    variables: Tuple[Variable, ...]
    objective: Tuple[Fraction, ...]
    constraints: Tuple[Constraint, ...] = ()
    name: str = "lp"

    def __post_init__(self):
        if len(self.objective) != len(self.variables):
            raise ValueError("objective length differs from the number of variables")
        for row in self.constraints:
            if len(row.coefficients) != len(self.variables):
                raise ValueError(f"row {row.name} has {len(row.coefficients)} coefficients")
        for labels, kind in (([v.name for v in self.variables], "variable"),
                             ([c.name for c in self.constraints], "row")):
            if len(set(labels)) != len(labels):
                raise ValueError(f"{kind} labels are not unique")
        for v in self.variables:
            if v.lower is not None and v.upper is not None and v.lower > v.upper:
                raise ValueError(f"variable {v.name} has empty bounds")

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_rows(self) -> int:
        return len(self.constraints)

    def index(self, name: str) -> int:
        for j, v in enumerate(self.variables):
            if v.name == name:
                return j
        raise KeyError(name)

    def dump(self) -> str:
        """Human-readable listing of objective, rows and bounds."""
        def expression(coefficients: Sequence[Fraction]) -> str:
            terms = []
            for a, v in zip(coefficients, self.variables):
                if a == 0:
                    continue
                sign = "-" if a < 0 else "+"
                magnitude = abs(a)
                body = v.name if magnitude == 1 else f"{format_rational(magnitude)} {v.name}"
                terms.append(f"{sign} {body}")
            if not terms:
                return "0"
            text = " ".join(terms)
            return text[2:] if text.startswith("+ ") else "-" + text[2:]

        lines = [f"\\ {self.name}: {self.num_variables} variables, {self.num_rows} rows", "maximize"]
        lines.append(f"  obj: {expression(self.objective)}")
        lines.append("subject to")
        for row in self.constraints:
            lines.append(f"  {row.name}: {expression(row.coefficients)} {row.relation.value} {format_rational(row.rhs)}")
        lines.append("bounds")
        for v in self.variables:
            if v.is_free:
                lines.append(f"  {v.name} free")
            elif v.upper is None:
                lines.append(f"  {v.name} >= {format_rational(v.lower)}")
            elif v.lower is None:
                lines.append(f"  {v.name} <= {format_rational(v.upper)}")
            else:
                lines.append(f"  {format_rational(v.lower)} <= {v.name} <= {format_rational(v.upper)}")
        lines.append("end")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: Optional[Fraction] = None
    assignment: Dict[str, Fraction] = field(default_factory=dict)
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def __getitem__(self, name: str) -> Fraction:
        return self.assignment[name]


# Standard form

@dataclass
class _StandardForm:
    """Columns in [0, upper]; each original variable is offset + sum(sign * column)."""
    columns: List[str]
    pieces: List[List[Tuple[int, int]]]
    offsets: List[Fraction]
    uppers: List[Optional[Fraction]]
    rows: List[List[Fraction]]
    relations: List[Relation]
    rhs: List[Fraction]
    costs: List[Fraction]


def _standardize(lp: LinearProgram) -> _StandardForm:
    columns: List[str] = []
    pieces: List[List[Tuple[int, int]]] = []
    offsets: List[Fraction] = []
    uppers: List[Optional[Fraction]] = []

    for v in lp.variables:
        if v.is_free:
            columns += [f"{v.name}+", f"{v.name}-"]
            uppers += [None, None]
            pieces.append([(len(columns) - 2, 1), (len(columns) - 1, -1)])
            offsets.append(ZERO)
        elif v.lower is None:
            columns.append(f"{v.name}'")
            uppers.append(None)
            pieces.append([(len(columns) - 1, -1)])
            offsets.append(v.upper)
        else:
            columns.append(v.name)
            uppers.append(None if v.upper is None else v.upper - v.lower)
            pieces.append([(len(columns) - 1, 1)])
            offsets.append(v.lower)

    width = len(columns)
    rows, relations, rhs = [], [], []
    for row in lp.constraints:
        dense = [ZERO] * width
        shift = ZERO
        for a, piece, offset in zip(row.coefficients, pieces, offsets):
            if a == 0:
                continue
            shift += a * offset
            for col, sign in piece:
                dense[col] += sign * a
        rows.append(dense)
        relations.append(row.relation)
        rhs.append(row.rhs - shift)

    costs = [ZERO] * width
    for c, piece in zip(lp.objective, pieces):
        for col, sign in piece:
            costs[col] += sign * c
    return _StandardForm(columns, pieces, offsets, uppers, rows, relations, rhs, costs)


class _Tableau:
    """
    Dense simplex tableau; the last column is the right-hand side.

    Upper bounds stay out of the rows: a column sitting at its bound is
    complemented (x -> u - x), so every nonbasic column is at zero and
    `flipped` records which columns currently stand for u - x.
    """

    def __init__(self, body: np.ndarray, basis: List[int], uppers: List[Optional[Fraction]]):
        self.body = body
        self.basis = basis
        self.uppers = list(uppers)
        self.flipped = [False] * len(self.uppers)
        self.z = np.full(body.shape[1], ZERO, dtype=object)
        self.iterations = 0

    def upper(self, col: int) -> Optional[Fraction]:
        return self.uppers[col] if col < len(self.uppers) else None

    def price(self, costs: Sequence[Fraction]) -> None:
        """Reduced costs c_j - c_B B^-1 A_j; z[-1] holds minus the objective value."""
        z = np.array(
            [-c if j < len(self.flipped) and self.flipped[j] else c for j, c in enumerate(costs)] + [ZERO],
            dtype=object,
        )
        for j, flipped in enumerate(self.flipped):
            if flipped and j < len(costs):
                z[-1] -= costs[j] * self.uppers[j]
        for r, col in enumerate(self.basis):
            if z[col] != 0:
                z = z - z[col] * self.body[r]
        self.z = z

    def pivot(self, r: int, s: int) -> None:
        self.body[r] = self.body[r] / self.body[r, s]
        support = np.nonzero(self.body[r])[0]
        pivot_row = self.body[r, support]
        for i in np.nonzero(self.body[:, s])[0]:
            if i != r:
                self.body[i, support] = self.body[i, support] - self.body[i, s] * pivot_row
        if self.z[s] != 0:
            self.z[support] = self.z[support] - self.z[s] * pivot_row
        self.basis[r] = s
        self.iterations += 1

    def flip_nonbasic(self, s: int) -> None:
        """x_s moves from one bound to the other without a basis change."""
        u = self.uppers[s]
        column = self.body[:, s]
        self.body[:, -1] = self.body[:, -1] - u * column
        self.body[:, s] = -column
        self.z[-1] -= u * self.z[s]
        self.z[s] = -self.z[s]
        self.flipped[s] = not self.flipped[s]
        self.iterations += 1

    def flip_basic(self, r: int) -> None:
        """The basic variable of row r is replaced by its complement."""
        col = self.basis[r]
        row = -self.body[r]
        row[col] = ONE
        row[-1] = self.uppers[col] + row[-1]
        self.body[r] = row
        self.flipped[col] = not self.flipped[col]

    def run(self, allowed: int) -> LpStatus:
        """Bland's rule on columns [0, allowed)."""
        while True:
            entering = next((j for j in range(allowed) if self.z[j] > 0), None)
            if entering is None:
                return LpStatus.OPTIMAL
            best = None
            for r in np.nonzero(self.body[:, entering])[0]:
                a = self.body[r, entering]
                if a > 0:
                    key = (self.body[r, -1] / a, self.basis[r])
                else:
                    cap = self.upper(self.basis[r])
                    if cap is None:
                        continue
                    key = (self.body[r, -1] - cap) / a, self.basis[r]
                if best is None or key < best[0]:
                    best = (key, r)
            cap = self.upper(entering)
            if cap is not None and (best is None or (cap, entering) < best[0]):
                logger.debug("pivot: column %d moves to its other bound", entering)
                self.flip_nonbasic(entering)
                continue
            if best is None:
                return LpStatus.UNBOUNDED
            r = best[1]
            if self.body[r, entering] < 0:
                self.flip_basic(r)
            logger.debug("pivot: column %d enters, row %d leaves", entering, r)
            self.pivot(r, entering)

    @property
    def objective(self) -> Fraction:
        return -self.z[-1]

    def column_values(self, width: int) -> List[Fraction]:
        values = [ZERO] * width
        for r, col in enumerate(self.basis):
            if col < width:
                values[col] = self.body[r, -1]
        return [self.uppers[j] - v if self.flipped[j] else v for j, v in enumerate(values)]


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Exact optimum via two-phase primal simplex; infeasible and unbounded are statuses."""
    sf = _standardize(lp)
    width = len(sf.columns)
    m = len(sf.rows)

    # Orient rows so every right-hand side is non-negative, then pick slack or artificial bases.
    oriented = []
    for dense, relation, b in zip(sf.rows, sf.relations, sf.rhs):
        if relation is Relation.GE:
            dense, relation, b = [-a for a in dense], Relation.LE, -b
        if b < 0:
            dense, b = [-a for a in dense], -b
            relation = Relation.GE if relation is Relation.LE else relation
        oriented.append((dense, relation, b))

    slack_count = sum(1 for _, rel, _ in oriented if rel is not Relation.EQ)
    artificial_rows = [r for r, (_, rel, _) in enumerate(oriented) if rel is not Relation.LE]
    total = width + slack_count + len(artificial_rows)
    body = np.full((m, total + 1), ZERO, dtype=object)
    basis = [0] * m
    slack = width
    artificial = width + slack_count
    for r, (dense, relation, b) in enumerate(oriented):
        body[r, :width] = dense
        body[r, -1] = b
        if relation is Relation.LE:
            body[r, slack] = ONE
            basis[r] = slack
            slack += 1
        else:
            if relation is Relation.GE:
                body[r, slack] = -ONE
                slack += 1
            body[r, artificial] = ONE
            basis[r] = artificial
            artificial += 1

    tableau = _Tableau(body, basis, sf.uppers)
    first_artificial = width + slack_count

    if artificial_rows:
        tableau.price([ZERO] * first_artificial + [-ONE] * len(artificial_rows))
        tableau.run(total)
        if tableau.objective < 0:
            logger.debug("%s infeasible after %d pivots", lp.name, tableau.iterations)
            return LpSolution(status=LpStatus.INFEASIBLE, iterations=tableau.iterations)
        # Drive zero-valued artificials out; rows with no other support are redundant.
        r = 0
        while r < tableau.body.shape[0]:
            if tableau.basis[r] >= first_artificial:
                s = next((j for j in range(first_artificial) if tableau.body[r, j] != 0), None)
                if s is None:
                    tableau.body = np.delete(tableau.body, r, axis=0)
                    del tableau.basis[r]
                    continue
                tableau.pivot(r, s)
            r += 1
        tableau.body = np.delete(tableau.body, np.s_[first_artificial:total], axis=1)

    tableau.price(list(sf.costs) + [ZERO] * slack_count)
    status = tableau.run(first_artificial)
    if status is LpStatus.UNBOUNDED:
        logger.debug("%s unbounded after %d pivots", lp.name, tableau.iterations)
        return LpSolution(status=status, iterations=tableau.iterations)

    columns = tableau.column_values(width)
    values = [
        offset + sum((sign * columns[col] for col, sign in piece), ZERO)
        for piece, offset in zip(sf.pieces, sf.offsets)
    ]
    value = sum((c * x for c, x in zip(lp.objective, values)), ZERO)
    _check_solution(lp, values)
    logger.debug("%s optimal value %s after %d pivots", lp.name, value, tableau.iterations)
    return LpSolution(
        status=LpStatus.OPTIMAL,
        value=value,
        assignment={v.name: x for v, x in zip(lp.variables, values)},
        iterations=tableau.iterations,
    )


def _check_solution(lp: LinearProgram, values: Sequence[Fraction]) -> None:
    for row in lp.constraints:
        if not row.satisfied_by(values):
            raise LpError(f"{lp.name}: row {row.name} violated at the reported optimum")
    for v, x in zip(lp.variables, values):
        if (v.lower is not None and x < v.lower) or (v.upper is not None and x > v.upper):
            raise LpError(f"{lp.name}: variable {v.name} = {x} outside its bounds")


# Builders

def q_name(i: int, k: int) -> str:
    return f"q[{i},{k}]"


def t_name(i: int) -> str:
    return f"t[{i}]"


def build_revenue_lp(inst: Instance) -> LinearProgram:
    """Revenue maximization over all direct mechanisms: q in [0,1]^{n x d}, free t."""
    n, d = inst.n, inst.d
    variables = [Variable(q_name(i, k), ZERO, ONE) for i in inst.types() for k in inst.items()]
    variables += [Variable(t_name(i), None, None) for i in inst.types()]
    width = len(variables)

    def q_col(i: int, k: int) -> int:
        return (i - 1) * d + (k - 1)

    def t_col(i: int) -> int:
        return n * d + (i - 1)

    objective = [ZERO] * width
    for i in inst.types():
        objective[t_col(i)] = inst.prob(i)

    rows = []
    for j in inst.types():
        for i in inst.types():
            if i == j:
                continue
            # <q_j, theta_j> - t_j - <q_i, theta_j> + t_i >= 0
            coefficients = [ZERO] * width
            for k in inst.items():
                coefficients[q_col(j, k)] += inst.value(j, k)
                coefficients[q_col(i, k)] -= inst.value(j, k)
            coefficients[t_col(j)] = -ONE
            coefficients[t_col(i)] = ONE
            rows.append(Constraint(f"IC[{j},{i}]", tuple(coefficients), Relation.GE, ZERO))
    for j in inst.types():
        coefficients = [ZERO] * width
        for k in inst.items():
            coefficients[q_col(j, k)] = inst.value(j, k)
        coefficients[t_col(j)] = -ONE
        rows.append(Constraint(f"IR[{j}]", tuple(coefficients), Relation.GE, ZERO))
    return LinearProgram(tuple(variables), tuple(objective), tuple(rows), name="revenue")


def build_transfer_lp(inst: Instance, q: Sequence[Sequence[Fraction]]) -> LinearProgram:
    """Transfers only; the same IC and IR rows with the allocation held fixed."""
    if len(q) != inst.n or any(len(row) != inst.d for row in q):
        raise ValueError(f"allocation must be {inst.n} x {inst.d}")
    n = inst.n
    variables = tuple(Variable(t_name(i), None, None) for i in inst.types())
    objective = tuple(inst.prob(i) for i in inst.types())
    rows = []
    for j in inst.types():
        theta_j = inst.row(j)
        own = dot(q[j - 1], theta_j)
        for i in inst.types():
            if i == j:
                continue
            # t_j - t_i <= <q_j - q_i, theta_j>
            coefficients = [ZERO] * n
            coefficients[j - 1] = ONE
            coefficients[i - 1] = -ONE
            rows.append(Constraint(f"IC[{j},{i}]", tuple(coefficients), Relation.LE, own - dot(q[i - 1], theta_j)))
    for j in inst.types():
        coefficients = [ZERO] * n
        coefficients[j - 1] = ONE
        rows.append(Constraint(f"IR[{j}]", tuple(coefficients), Relation.LE, dot(q[j - 1], inst.row(j))))
    return LinearProgram(variables, objective, tuple(rows), name="transfer")


def mechanism_from_solution(inst: Instance, solution: LpSolution) -> Mechanism:
    """Read (q, t) back out of a revenue LP solution."""
    if not solution.is_optimal:
        raise LpError(f"cannot read a mechanism from a {solution.status.value} LP")
    q = [[solution[q_name(i, k)] for k in inst.items()] for i in inst.types()]
    t = [solution[t_name(i)] for i in inst.types()]
    return Mechanism.from_rows(q, t)
