"""Replay of the column-reordering argument on a potential-outcome table.

Three parameter-independence (PI) steps each permute one setting's column
pair, rows moving together, until one of its columns agrees with a column
of an earlier setting:

    PI_A1A2    target a1,  moved (a2, bp2)
    PI_B1B3    target b1,  moved (ap3, b3)
    PI_Bp2Bp4  target bp2, moved (ap4, bp4)   (bp2 as left by PI_A1A2)

The outcome-independence (OI) step then permutes ap4 alone, inside each
class of rows sharing the same B' value, until it agrees with ap3.  What is
left is a table of quadruples (A, B, B', A') = (a1, b1, bp2, ap3).

Because pairs move as units and ap4 only moves within a B' class, every
full-table pair correlation is untouched by every step.

At finite n the multisets rarely match exactly.  Each step reports its
discrepancy ``d`` (rows where agreement is impossible) and fails when ``d``
exceeds the caller's integer tolerance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import CorrelationSet, OutcomeTable, check_bounded, chsh_statistic, mean, mean_product
from .errors import (
    EmptySampleError, InvalidParameterError, OIMismatchError, PIMismatchError,
    PIStepsNotAppliedError, RequiresDichotomicError, UnboundedValueError,
)
from .tabulator import full_table_correlations, read_csv_rows, _open, format_value


class ReorderStep(str, enum.Enum):
    PI_A1A2 = "PI_A1A2"
    PI_B1B3 = "PI_B1B3"
    PI_Bp2Bp4 = "PI_Bp2Bp4"
    OI_Ap3Ap4 = "OI_Ap3Ap4"


PI_STEPS = (ReorderStep.PI_A1A2, ReorderStep.PI_B1B3, ReorderStep.PI_Bp2Bp4)

# step -> (target column, moved pair, column of the pair matched to the target)
_PI_COLUMNS = {
    ReorderStep.PI_A1A2: ("a1", ("a2", "bp2"), "a2"),
    ReorderStep.PI_B1B3: ("b1", ("ap3", "b3"), "b3"),
    ReorderStep.PI_Bp2Bp4: ("bp2", ("ap4", "bp4"), "bp4"),
}

# correlation each step must leave unchanged
_PRESERVED = {
    ReorderStep.PI_A1A2: "c_abp",
    ReorderStep.PI_B1B3: "c_apb",
    ReorderStep.PI_Bp2Bp4: "c_apbp",
    ReorderStep.OI_Ap3Ap4: "c_apbp",
}

EXACT = 1e-12


@dataclass(frozen=True)
class ReorderAudit:
    step: ReorderStep
    discrepancy: int
    correlations_before: CorrelationSet
    correlations_after: CorrelationSet
    permutation_applied: np.ndarray = field(repr=False)
    d_plus: int | None = None
    d_minus: int | None = None

    @property
    def moves(self) -> list[tuple[int, int]]:
        """``(source_row, destination_row)`` for every row that moved."""
        dest = np.flatnonzero(self.permutation_applied != np.arange(self.permutation_applied.size))
        return [(int(self.permutation_applied[i]), int(i)) for i in dest]

    @property
    def preservation_error(self) -> float:
        name = _PRESERVED[self.step]
        return abs(getattr(self.correlations_before, name) - getattr(self.correlations_after, name))

    def preserved(self, tol: float = EXACT) -> bool:
        return self.preservation_error <= tol

    def as_dict(self) -> dict:
        out = {
            "step": self.step.value,
            "discrepancy": self.discrepancy,
            "correlations_before": self.correlations_before.as_dict(),
            "correlations_after": self.correlations_after.as_dict(),
            "rows_moved": int(np.count_nonzero(self.permutation_applied != np.arange(self.permutation_applied.size))),
            "preservation_error": self.preservation_error,
        }
        if self.d_plus is not None:
            out["d_plus"], out["d_minus"] = self.d_plus, self.d_minus
        return out


class JointTable:
    """Rows of quadruples (A, B, B', A')."""

    __slots__ = ("a", "b", "bp", "ap")

    def __init__(self, a, b, bp, ap):
        cols = [np.array(c, dtype=float) for c in (a, b, bp, ap)]
        if len({c.shape for c in cols}) != 1 or cols[0].ndim != 1:
            raise InvalidParameterError("joint columns must be 1-d and of equal length")
        for c in cols:
            c.setflags(write=False)
        self.a, self.b, self.bp, self.ap = cols

    @classmethod
    def from_rows(cls, rows) -> "JointTable":
        arr = np.asarray(rows, dtype=float).reshape(-1, 4)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])

    def __len__(self):
        return self.a.size

    @property
    def rows(self) -> np.ndarray:
        return np.column_stack([self.a, self.b, self.bp, self.ap])

    @property
    def dichotomic(self) -> bool:
        return bool(np.all(np.abs(self.rows) == 1.0))

    def correlations(self) -> CorrelationSet:
        if len(self) == 0:
            raise EmptySampleError()
        return CorrelationSet(
            c_ab=mean_product(self.a, self.b),
            c_apb=mean_product(self.ap, self.b),
            c_abp=mean_product(self.a, self.bp),
            c_apbp=mean_product(self.ap, self.bp),
        )

    def chsh(self) -> float:
        return chsh_statistic(self.correlations())

    def __eq__(self, other):
        if not isinstance(other, JointTable):
            return NotImplemented
        return np.array_equal(self.rows, other.rows)

    def __repr__(self):
        return f"JointTable(n={len(self)})"


def _require_dichotomic(table: OutcomeTable):
    if not table.dichotomic:
        raise RequiresDichotomicError("the reorder engine accepts dichotomic tables only")


def min_discrepancy(target, moved) -> int:
    """Rows where ``target`` and a permutation of ``moved`` must disagree."""
    return abs(int(np.count_nonzero(np.asarray(target) > 0)) - int(np.count_nonzero(np.asarray(moved) > 0)))


def greedy_assignment(target, moved) -> np.ndarray:
    """Stable matching of ``moved`` onto ``target`` for +-1 columns.

    Returns ``perm`` with ``moved[perm]`` agreeing with ``target`` on as many
    rows as possible.  For each value, the k-th target row needing it takes
    the k-th moved row holding it; rows that cannot agree take the leftover
    moved rows in index order.
    """
    target = np.asarray(target)
    moved = np.asarray(moved)
    n = target.size
    perm = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n, dtype=bool)
    for v in (1.0, -1.0):
        t = np.flatnonzero(target == v)
        m = np.flatnonzero(moved == v)
        k = min(t.size, m.size)
        perm[t[:k]] = m[:k]
        used[m[:k]] = True
    perm[perm < 0] = np.flatnonzero(~used)
    return perm


def _check_assignment(perm, target, moved, d: int, what: str) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    n = np.asarray(target).size
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise InvalidParameterError(f"{what}: assignment is not a permutation of {n} rows")
    mismatches = int(np.count_nonzero(np.asarray(target) != np.asarray(moved)[perm]))
    if mismatches != d:
        raise InvalidParameterError(f"{what}: assignment leaves {mismatches} mismatches, minimum is {d}")
    return perm


def match_pair_pi(table: OutcomeTable, step, tolerance: int, assignment=None):
    """Apply one PI step; returns ``(new_table, audit)``.

    ``assignment`` optionally fixes which source row each destination row
    receives (it must achieve the minimum discrepancy); by default the
    stable greedy matching is used.
    """
    step = ReorderStep(step)
    if step not in _PI_COLUMNS:
        raise InvalidParameterError(f"{step.value} is not a PI step")
    _require_dichotomic(table)
    target_col, pair, matched = _PI_COLUMNS[step]
    target, moved = table.column(target_col), table.column(matched)
    d = min_discrepancy(target, moved)
    if d > tolerance:
        raise PIMismatchError(step.value, d, tolerance)
    if assignment is None:
        perm = greedy_assignment(target, moved)
    else:
        perm = _check_assignment(assignment, target, moved, d, step.value)
    before = full_table_correlations(table)
    new = table.with_columns(**{c: table.column(c)[perm] for c in pair})
    return new, ReorderAudit(step, d, before, full_table_correlations(new), perm)


def _bp_classes(table: OutcomeTable):
    bp2, bp4 = table.bp2, table.bp4
    expected = min_discrepancy(bp2, bp4)
    if int(np.count_nonzero(bp2 != bp4)) != expected:
        raise PIStepsNotAppliedError(
            f"bp2 and bp4 disagree on {int(np.count_nonzero(bp2 != bp4))} rows; "
            f"after PI_Bp2Bp4 at most {expected} may")
    return {v: np.flatnonzero(bp4 == v) for v in (1.0, -1.0)}


def match_oi(table: OutcomeTable, tolerance: int):
    """Apply the OI step; returns ``(new_table, audit)``.

    ap4 is permuted separately inside the B' = +1 and B' = -1 classes (rows
    grouped by bp4, which moved together with ap4) to agree with ap3.
    """
    _require_dichotomic(table)
    classes = _bp_classes(table)
    ap3, ap4 = table.ap3, table.ap4
    perm = np.arange(len(table))
    d = {}
    for v, rows in classes.items():
        d[v] = min_discrepancy(ap3[rows], ap4[rows])
        perm[rows] = rows[greedy_assignment(ap3[rows], ap4[rows])]
    if d[1.0] + d[-1.0] > tolerance:
        raise OIMismatchError(d[1.0], d[-1.0], tolerance)
    before = full_table_correlations(table)
    new = table.with_columns(ap4=ap4[perm])
    return new, ReorderAudit(ReorderStep.OI_Ap3Ap4, d[1.0] + d[-1.0], before,
                             full_table_correlations(new), perm, d[1.0], d[-1.0])


# ---------------------------------------------------------------- planning
#
# The PI steps leave freedom in *which* maximal matching is used, and that
# choice decides how well ap3 and ap4 can later be aligned inside the B'
# classes.  A matching chosen by row order alone couples pairs drawn from
# unrelated microstates and, for stochastic local models, leaves an OI
# discrepancy of order n.  The planner instead picks the maximal PI
# matchings that minimise the final OI discrepancy.
#
# Rows are interchangeable within a type, so the search runs over counts:
# x[c] is the number of rows whose final content has category
# c = (a1, b1, a2, bp2, b3, ap3, bp4).  Any non-negative integer x meeting
# the marginal and minimal-mismatch constraints is realisable, and the OI
# discrepancy depends on x only through X = #{bp4 = +1, ap3 = +1}.

_CAT_FIELDS = ("a1", "b1", "a2", "bp2", "b3", "ap3", "bp4")
_CATS = np.array([[1 - 2 * ((c >> (6 - j)) & 1) for j in range(7)] for c in range(128)], dtype=float)


def _code(*cols) -> np.ndarray:
    """Integer code of a tuple of +-1 columns (bit 1 = -1, first column most significant)."""
    code = np.zeros(np.asarray(cols[0]).size, dtype=np.int64)
    for c in cols:
        code = (code << 1) | (np.asarray(c) < 0)
    return code


@dataclass(frozen=True)
class ReorderPlan:
    discrepancies: dict
    assignments: tuple
    oi_split: tuple[int, int]
    method: str

    @property
    def oi_discrepancy(self) -> int:
        return self.discrepancies[ReorderStep.OI_Ap3Ap4]


def _oi_discrepancy_of(table: OutcomeTable, perms) -> tuple[int, int]:
    p1, p2, p3 = perms
    ap3 = table.ap3[p2]
    bp4 = table.bp4[p3]
    ap4 = table.ap4[p3]
    return tuple(min_discrepancy(ap3[bp4 == v], ap4[bp4 == v]) for v in (1.0, -1.0))


def _greedy_perms(table: OutcomeTable):
    p1 = greedy_assignment(table.a1, table.a2)
    p2 = greedy_assignment(table.b1, table.b3)
    p3 = greedy_assignment(table.bp2[p1], table.bp4)
    return p1, p2, p3


def _solve_counts(table: OutcomeTable) -> np.ndarray:
    from scipy.optimize import LinearConstraint, milp

    t = table
    n = len(t)
    cat = {name: _CATS[:, j] for j, name in enumerate(_CAT_FIELDS)}
    rows, rhs = [], []

    def marginal(fields, columns):
        observed = np.bincount(_code(*columns), minlength=2 ** len(fields))
        cat_code = _code(*(cat[f] for f in fields))
        for k in range(2 ** len(fields)):
            rows.append((cat_code == k).astype(float))
            rhs.append(observed[k])

    marginal(("a1", "b1"), (t.a1, t.b1))
    marginal(("a2", "bp2"), (t.a2, t.bp2))
    marginal(("ap3", "b3"), (t.ap3, t.b3))
    marginal(("bp4",), (t.bp4,))
    for x, y, d in (("a1", "a2", min_discrepancy(t.a1, t.a2)),
                    ("b1", "b3", min_discrepancy(t.b1, t.b3)),
                    ("bp2", "bp4", min_discrepancy(t.bp2, t.bp4))):
        rows.append((cat[x] != cat[y]).astype(float))
        rhs.append(d)

    eq = np.zeros((len(rows), 130))
    eq[:, :128] = rows
    x_plus = ((cat["bp4"] > 0) & (cat["ap3"] > 0)).astype(float)
    m_plus = int(np.count_nonzero((t.bp4 > 0) & (t.ap4 > 0)))
    m_minus = int(np.count_nonzero((t.bp4 < 0) & (t.ap4 > 0)))
    v_plus = int(np.count_nonzero(t.ap3 > 0))
    # t1 >= |X - m_plus|, t2 >= |(v_plus - X) - m_minus|
    ineq = np.zeros((4, 130))
    ineq[0, :128], ineq[0, 128] = x_plus, -1.0
    ineq[1, :128], ineq[1, 128] = -x_plus, -1.0
    ineq[2, :128], ineq[2, 129] = -x_plus, -1.0
    ineq[3, :128], ineq[3, 129] = x_plus, -1.0
    ub = np.array([m_plus, -m_plus, m_minus - v_plus, v_plus - m_minus], dtype=float)
    c = np.zeros(130)
    c[128:] = 1.0
    rhs = np.asarray(rhs, dtype=float)
    res = milp(
        c,
        constraints=[LinearConstraint(eq, rhs, rhs), LinearConstraint(ineq, -np.inf, ub)],
        integrality=np.r_[np.ones(128), np.zeros(2)],
        bounds=(0, n),
    )
    if res.status != 0:
        raise RuntimeError(f"reorder planning failed: {res.message}")
    return np.rint(res.x[:128]).astype(np.int64), int(round(res.fun))


def _realise(table: OutcomeTable, counts: np.ndarray):
    t = table
    n = len(t)
    row_type = _code(t.a1, t.b1)
    cat_row_type = _code(_CATS[:, 0], _CATS[:, 1])
    category = np.empty(n, dtype=np.int64)
    for k in range(4):
        rows = np.flatnonzero(row_type == k)
        cats = np.flatnonzero(cat_row_type == k)
        category[rows] = np.repeat(cats, counts[cats])
    need = _CATS[category]

    def assign(required_code, source_code):
        dest = np.argsort(required_code, kind="stable")
        src = np.argsort(source_code, kind="stable")
        perm = np.empty(n, dtype=np.int64)
        perm[dest] = src
        return perm

    p1 = assign(_code(need[:, 2], need[:, 3]), _code(t.a2, t.bp2))
    p2 = assign(_code(need[:, 5], need[:, 4]), _code(t.ap3, t.b3))
    p3 = assign(_code(need[:, 6]), _code(t.bp4))
    return p1, p2, p3


def plan_reordering(table: OutcomeTable) -> ReorderPlan:
    """Minimal discrepancy of every step and PI assignments achieving it."""
    _require_dichotomic(table)
    t = table
    d = {
        ReorderStep.PI_A1A2: min_discrepancy(t.a1, t.a2),
        ReorderStep.PI_B1B3: min_discrepancy(t.b1, t.b3),
        ReorderStep.PI_Bp2Bp4: min_discrepancy(t.bp2, t.bp4),
    }
    perms = _greedy_perms(t)
    split = _oi_discrepancy_of(t, perms)
    method = "greedy"
    # the OI discrepancy can never beat the whole-table count mismatch
    if sum(split) > min_discrepancy(t.ap3, t.ap4):
        counts, optimum = _solve_counts(t)
        planned = _realise(t, counts)
        planned_split = _oi_discrepancy_of(t, planned)
        if sum(planned_split) != optimum:
            raise AssertionError("realised arrangement does not reach the planned optimum")
        if sum(planned_split) < sum(split):
            perms, split, method = planned, planned_split, "planned"
    d[ReorderStep.OI_Ap3Ap4] = sum(split)
    return ReorderPlan(d, perms, split, method)


# ---------------------------------------------------------------- replay

@dataclass
class ProofReplay:
    """Everything produced while replaying the argument on one table."""

    input_table: OutcomeTable
    tolerance: int
    plan: ReorderPlan
    audits: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    joint: JointTable | None = None
    failure: Exception | None = None

    @property
    def succeeded(self) -> bool:
        return self.failure is None

    @property
    def pi_table(self) -> OutcomeTable | None:
        """Table after the three PI steps, if they all ran."""
        return self.stages[2] if len(self.stages) >= 3 else None

    @property
    def failed_step(self) -> str | None:
        return None if self.failure is None else self.failure.step


def replay_proof(table: OutcomeTable, tolerance: int) -> ProofReplay:
    """Run the four steps in order, recording audits; never raises a mismatch."""
    if tolerance < 0:
        raise InvalidParameterError("tolerance must be non-negative")
    _require_dichotomic(table)
    plan = plan_reordering(table)
    replay = ProofReplay(table, int(tolerance), plan)
    current = table
    try:
        for step, perm in zip(PI_STEPS, plan.assignments):
            current, audit = match_pair_pi(current, step, tolerance, assignment=perm)
            replay.audits.append(audit)
            replay.stages.append(current)
        current, audit = match_oi(current, tolerance)
        replay.audits.append(audit)
        replay.stages.append(current)
    except (PIMismatchError, OIMismatchError) as exc:
        exc.audits = tuple(replay.audits)
        exc.table = current
        replay.failure = exc
        return replay

    for x, y, step in (("a1", "a2", ReorderStep.PI_A1A2),
                       ("b1", "b3", ReorderStep.PI_B1B3),
                       ("bp2", "bp4", ReorderStep.PI_Bp2Bp4)):
        left = int(np.count_nonzero(current.column(x) != current.column(y)))
        if left != plan.discrepancies[step]:
            raise AssertionError(f"{step.value} matching disturbed by a later step")
    replay.joint = JointTable(current.a1, current.b1, current.bp2, current.ap3)
    if replay.joint.chsh() > 2.0 + EXACT:
        raise AssertionError("joint table violates the CHSH bound")
    return replay


def derive_joint(table: OutcomeTable, tolerance: int):
    """Return ``(JointTable, audits)`` or raise the first step's mismatch."""
    replay = replay_proof(table, tolerance)
    if replay.failure is not None:
        raise replay.failure
    return replay.joint, list(replay.audits)


def joint_deviation_bound(replay: ProofReplay) -> float:
    """Largest possible gap between joint-table and input full-table correlations.

    A row where a step could not achieve agreement shifts one product by at
    most 2, hence ``2 * d / n`` per affected correlation.
    """
    n = len(replay.input_table)
    d = replay.plan.discrepancies
    return 2.0 * max(d[ReorderStep.PI_A1A2], d[ReorderStep.PI_B1B3],
                     d[ReorderStep.PI_Bp2Bp4] + d[ReorderStep.OI_Ap3Ap4]) / n


# ---------------------------------------------------------------- chain

@dataclass(frozen=True)
class ChainLink:
    name: str
    lhs: str
    relation: str
    rhs: str
    lhs_value: float
    rhs_value: float
    passed: bool

    def as_dict(self) -> dict:
        return {"link": self.name, "relation": f"{self.lhs} {self.relation} {self.rhs}",
                "lhs": self.lhs_value, "rhs": self.rhs_value, "passed": self.passed}


@dataclass(frozen=True)
class ChainReport:
    values: dict
    links: tuple

    @property
    def passed(self) -> bool:
        return all(link.passed for link in self.links)

    def as_dict(self) -> dict:
        return {"values": dict(self.values), "links": [l.as_dict() for l in self.links],
                "passed": self.passed}


def verify_chain(joint: JointTable, tol: float = EXACT) -> ChainReport:
    """Evaluate each quantity of the bounding chain and check each link.

    Values only need |v| <= 1; dichotomy is not required.
    """
    if len(joint) == 0:
        raise EmptySampleError()
    a, b, bp, ap = (check_bounded(c) for c in (joint.a, joint.b, joint.bp, joint.ap))
    expr = a * bp + bp * ap + ap * b - b * a
    max_a = np.maximum(np.abs(a), np.abs(ap))
    L = {
        "L1": abs(mean_product(a, bp) + mean_product(bp, ap) + mean_product(ap, b) - mean_product(b, a)),
        "L2": abs(mean(expr)),
        "L3": mean(np.abs(expr)),
        "L4": mean(np.abs(a * (bp - b) + ap * (bp + b))),
        "L5": mean(np.abs(a) * np.abs(bp - b) + np.abs(ap) * np.abs(bp + b)),
        "L6": mean(max_a * (np.abs(bp - b) + np.abs(bp + b))),
        "L7": 2.0 * mean(max_a * np.maximum(np.abs(b), np.abs(bp))),
    }

    def link(name, lhs, rel, rhs):
        x = L.get(lhs, 2.0) if lhs != "2" else 2.0
        y = L.get(rhs, 2.0) if rhs != "2" else 2.0
        ok = abs(x - y) <= tol if rel == "=" else x <= y + tol
        return ChainLink(name, lhs, rel, rhs, x, y, bool(ok))

    links = (
        link("sum-of-averages", "L1", "=", "L2"),
        link("abs-of-average", "L2", "<=", "L3"),
        link("regroup", "L3", "=", "L4"),
        link("triangle", "L4", "<=", "L5"),
        link("max-factor", "L5", "<=", "L6"),
        link("pair-bound", "L6", "<=", "L7"),
        link("pair-bound-exact", "L6", "=", "L7"),
        link("unit-bound", "L7", "<=", "2"),
    )
    return ChainReport(L, links)


# ---------------------------------------------------------------- CSV

JOINT_HEADER = ("trial", "A", "B", "Bp", "Ap")


def write_joint_csv(joint: JointTable, target) -> None:
    import csv

    fh, close = _open(target, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(JOINT_HEADER)
        d = joint.dichotomic
        for t, row in enumerate(joint.rows.tolist()):
            w.writerow([t, *(format_value(v, d) for v in row)])
    finally:
        if close:
            fh.close()


def read_joint_csv(target) -> JointTable:
    from .tabulator import _parse_value
    from .errors import TableFormatError

    rows = read_csv_rows(target, JOINT_HEADER)
    vals = []
    for i, (lineno, cells) in enumerate(rows):
        if cells[0] != str(i):
            raise TableFormatError(f"row {lineno}, column trial: expected {i}", row=lineno, column="trial")
        vals.append([_parse_value(c, lineno, h) for c, h in zip(cells[1:], JOINT_HEADER[1:])])
    return JointTable.from_rows(vals)
