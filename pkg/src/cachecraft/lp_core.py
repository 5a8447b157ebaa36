"""Canonical LP representation and a bundled dense simplex solver.

The bundled solver is a two-phase full-tableau primal simplex with Bland's
anti-cycling rule as the default pivot choice (these placement LPs sit on
heavily degenerate vertices).  It is the reference solver for every
polynomial-size formulation and for the solver soundness tests.

An external solver is anything callable as ``solver(lp, options) ->
LpSolution``; ``solve_with_scipy`` adapts scipy's HiGHS backend to that
interface and is what the builders use for the exponential-family general
problem, whose epigraph dimensions overwhelm a dense tableau.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_PIVOT_EPS = 1e-11


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple  # ((var_index, coefficient), ...)
    relation: str  # "<=", "=", ">="
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.relation not in ("<=", "=", ">="):
            raise ValueError(f"bad relation {self.relation!r}")
        if not np.isfinite(self.rhs):
            raise ValueError("rhs must be finite")


@dataclass
class LinearProgram:
    """min c.x subject to rows (sparse), with per-variable bounds.

    Default bound is [0, +inf).  `names` are diagnostic labels only.
    """

    num_vars: int
    objective: dict = field(default_factory=dict)  # index -> coefficient
    constraints: list = field(default_factory=list)
    lower: list = field(default_factory=list)
    upper: list = field(default_factory=list)
    names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.lower:
            self.lower = [0.0] * self.num_vars
        if not self.upper:
            self.upper = [None] * self.num_vars
        if not self.names:
            self.names = [f"x{i}" for i in range(self.num_vars)]
        if not (len(self.lower) == len(self.upper) == len(self.names) == self.num_vars):
            raise ValueError("bounds/names length mismatch")

    def set_objective(self, coeffs) -> None:
        self.objective = {int(i): float(c) for i, c in dict(coeffs).items() if c != 0.0}

    def add_constraint(self, coeffs, relation: str, rhs: float, name: str = "") -> None:
        items = tuple((int(i), float(c)) for i, c in coeffs if c != 0.0)
        for i, _ in items:
            if not 0 <= i < self.num_vars:
                raise ValueError(f"constraint {name!r}: variable index {i} out of range")
        self.constraints.append(Constraint(items, relation, float(rhs), name))

    def set_bounds(self, index: int, lower: float = 0.0, upper: float | None = None) -> None:
        self.lower[index] = float(lower)
        self.upper[index] = None if upper is None else float(upper)

    def fix(self, index: int, value: float = 0.0) -> None:
        self.set_bounds(index, value, value)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for i, v in self.objective.items():
            c[i] = v
        return c

    def objective_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(c * x[i] for i, c in self.objective.items()))


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    objective_value: float
    x: np.ndarray
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass(frozen=True)
class SimplexOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    max_iters: int = 50_000
    pivot_rule: str = "bland"  # "bland" | "dantzig" (auto-falls back to bland)


def _standard_form(lp: LinearProgram):
    """Shift bounds to x >= 0, emit upper bounds as rows, add slack columns.

    Returns (A, b, c, n_real, slack_relations) where the standard problem is
    min c.y  s.t.  A y = b, y >= 0, b >= 0, and y[:n_real] = x - lower.
    """
    n = lp.num_vars
    lower = np.array(lp.lower, dtype=float)
    if not np.all(np.isfinite(lower)):
        raise SolverError("all variables need a finite lower bound")

    rows = []
    for con in lp.constraints:
        rhs = con.rhs - sum(c * lower[i] for i, c in con.coeffs)
        rows.append((con.coeffs, con.relation, rhs))
    for i in range(n):
        if lp.upper[i] is not None:
            rows.append((((i, 1.0),), "<=", lp.upper[i] - lower[i]))

    m = len(rows)
    slack_count = sum(1 for _, rel, _ in rows if rel != "=")
    a = np.zeros((m, n + slack_count))
    b = np.zeros(m)
    slack = n
    for r, (coeffs, rel, rhs) in enumerate(rows):
        sign = 1.0
        if rhs < 0:  # keep b >= 0 so phase 1 starts from a valid basis
            sign = -1.0
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        for i, c in coeffs:
            a[r, i] = sign * c
        b[r] = sign * rhs
        if rel == "<=":
            a[r, slack] = 1.0
            slack += 1
        elif rel == ">=":
            a[r, slack] = -1.0
            slack += 1
    c = np.zeros(n + slack_count)
    for i, v in lp.objective.items():
        c[i] = v
    return a, b, c, n, lower


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _run_simplex(tableau, basis, obj_row, bland, opt_tol, max_iters):
    """Iterate on (tableau | rhs) with reduced-cost row obj_row (last entry = -value)."""
    m = tableau.shape[0]
    iters = 0
    stall = 0
    use_bland = bland
    while True:
        costs = obj_row[:-1]
        if use_bland:
            entering = -1
            for j in range(costs.size):
                if costs[j] < -opt_tol:
                    entering = j
                    break
        else:
            entering = int(np.argmin(costs))
            if costs[entering] >= -opt_tol:
                entering = -1
        if entering < 0:
            return "optimal", iters
        col = tableau[:, entering]
        positive = col > _PIVOT_EPS
        if not positive.any():
            return "unbounded", iters
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[positive, -1] / col[positive]
        best = ratios.min()
        ties = np.where(ratios <= best + _PIVOT_EPS * (1.0 + abs(best)))[0]
        leaving = int(ties[np.argmin(basis[ties])])  # Bland tie-break: lowest basis index

        value_before = obj_row[-1]
        _pivot(tableau, basis, leaving, entering)
        obj_row -= obj_row[entering] * tableau[leaving]

        iters += 1
        if iters >= max_iters:
            return "iteration_limit", iters
        if not use_bland:
            # -value is stored in obj_row[-1]; no increase means a degenerate step
            stall = stall + 1 if obj_row[-1] <= value_before + 1e-15 else 0
            if stall > 2 * m + 10:  # suspected cycling: switch to Bland
                use_bland = True


def solve(lp: LinearProgram, options: SimplexOptions | None = None) -> LpSolution:
    """Two-phase primal simplex. Optimal status implies KKT residuals within tol."""
    opts = options or SimplexOptions()
    a, b, c, n_real, lower = _standard_form(lp)
    m, n_std = a.shape

    # Phase 1: artificial variables for every row, then prefer slack columns
    # that can serve as an initial identity basis.
    tableau = np.hstack([a, np.eye(m), b.reshape(-1, 1)])
    basis = np.arange(n_std, n_std + m)
    for r in range(m):
        for j in range(n_real, n_std):
            if a[r, j] == 1.0 and np.count_nonzero(a[:, j]) == 1:
                basis[r] = j
                tableau[r, n_std + r] = 0.0
                break

    phase1_cost = np.zeros(n_std + m + 1)
    phase1_cost[n_std : n_std + m] = 1.0
    obj_row = phase1_cost.copy()
    for r in range(m):
        if basis[r] >= n_std:
            obj_row -= tableau[r]

    status, it1 = _run_simplex(tableau, basis, obj_row, True, opts.opt_tol, opts.max_iters)
    if status == "iteration_limit":
        return LpSolution("iteration_limit", np.nan, np.full(lp.num_vars, np.nan), it1)
    scale = 1.0 + float(np.abs(b).max(initial=0.0))
    if -obj_row[-1] > opts.feas_tol * scale:
        return LpSolution("infeasible", np.nan, np.full(lp.num_vars, np.nan), it1)

    # Drive leftover artificials out of the basis; drop redundant rows.
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] >= n_std:
            pivot_col = -1
            for j in range(n_std):
                if abs(tableau[r, j]) > _PIVOT_EPS:
                    pivot_col = j
                    break
            if pivot_col >= 0:
                _pivot(tableau, basis, r, pivot_col)
            else:
                keep[r] = False
    tableau = tableau[keep][:, list(range(n_std)) + [n_std + m]]
    basis = basis[keep]
    a = a[keep]
    b = b[keep]
    m = tableau.shape[0]

    # Phase 2 with the real objective.
    obj_row = np.zeros(n_std + 1)
    obj_row[:n_std] = c
    for r in range(m):
        obj_row -= c[basis[r]] * tableau[r]

    bland = opts.pivot_rule == "bland"
    status, it2 = _run_simplex(tableau, basis, obj_row, bland, opts.opt_tol, opts.max_iters)
    iters = it1 + it2
    if status == "iteration_limit":
        return LpSolution("iteration_limit", np.nan, np.full(lp.num_vars, np.nan), iters)
    if status == "unbounded":
        return LpSolution("unbounded", -np.inf, np.full(lp.num_vars, np.nan), iters)

    y_std = np.zeros(n_std)
    y_std[basis] = tableau[:, -1]
    x = y_std[:n_real] + lower
    objective = lp.objective_value(x)

    diagnostics = _certify(lp, a, b, c, basis, x, objective, opts)
    return LpSolution("optimal", objective, x, iters, diagnostics)


def _certify(lp, a, b, c, basis, x, objective, opts) -> dict:
    """Dual certificate from the final basis, recomputed from the clean data."""
    dual_gap = np.nan
    min_reduced = np.nan
    try:
        y = np.linalg.solve(a[:, basis].T, c[basis])
        dual_gap = abs(float(c @ _basic_point(a, b, basis)) - float(y @ b))
        min_reduced = float((c - a.T @ y).min())
    except np.linalg.LinAlgError:
        pass
    report = check_solution(lp, x, opts.feas_tol)
    scale = 1.0 + abs(objective)
    if report.max_constraint_violation > opts.feas_tol * scale + opts.feas_tol:
        raise SolverError(
            f"simplex returned an infeasible point (violation {report.max_constraint_violation:.3e})"
        )
    return {
        "dual_gap": dual_gap,
        "min_reduced_cost": min_reduced,
        "max_constraint_violation": report.max_constraint_violation,
        "max_bound_violation": report.max_bound_violation,
        "solver": "bundled-simplex",
    }


def _basic_point(a, b, basis):
    x = np.zeros(a.shape[1])
    x[basis] = np.linalg.solve(a[:, basis], b)
    return x


@dataclass(frozen=True)
class ResidualReport:
    max_constraint_violation: float
    max_bound_violation: float
    objective_value: float
    worst_constraint: str = ""
    violated: tuple = ()  # (row name, violation, |rhs|) above the report threshold

    def within(self, tol: float) -> bool:
        return self.max_constraint_violation <= tol and self.max_bound_violation <= tol

    def within_relative(self, tol: float) -> bool:
        """Per-row tolerance scaled by max(1, |rhs|); bounds stay absolute."""
        if self.max_bound_violation > tol:
            return False
        return all(v <= tol * max(1.0, scale) for _, v, scale in self.violated)


def check_solution(lp: LinearProgram, x, tol: float = 1e-9) -> ResidualReport:
    """Residuals of a candidate point against every row and bound."""
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.num_vars,):
        raise ValueError(f"x has shape {x.shape}, expected ({lp.num_vars},)")
    worst = 0.0
    worst_name = ""
    violated = []
    for idx, con in enumerate(lp.constraints):
        lhs = sum(c * x[i] for i, c in con.coeffs)
        if con.relation == "<=":
            violation = lhs - con.rhs
        elif con.relation == ">=":
            violation = con.rhs - lhs
        else:
            violation = abs(lhs - con.rhs)
        if violation > worst:
            worst = violation
            worst_name = con.name or f"row{idx}"
        if violation > tol:
            violated.append((con.name or f"row{idx}", float(violation), abs(con.rhs)))
    bound_violation = 0.0
    for i in range(lp.num_vars):
        bound_violation = max(bound_violation, lp.lower[i] - x[i])
        if lp.upper[i] is not None:
            bound_violation = max(bound_violation, x[i] - lp.upper[i])
    return ResidualReport(
        max_constraint_violation=float(max(worst, 0.0)),
        max_bound_violation=float(max(bound_violation, 0.0)),
        objective_value=lp.objective_value(x),
        worst_constraint=worst_name,
        violated=tuple(violated),
    )


def export_text(lp: LinearProgram) -> str:
    """Plain-text LP dump, one constraint per line.

    Format:  `min: c1 name1 + c2 name2 ...`, then `rowname: lhs REL rhs`,
    then one `bounds:` line per variable with a non-default bound.
    """

    def term(i, c):
        return f"{c:+.12g} {lp.names[i]}"

    lines = ["min: " + " ".join(term(i, c) for i, c in sorted(lp.objective.items()))]
    for idx, con in enumerate(lp.constraints):
        name = con.name or f"row{idx}"
        lhs = " ".join(term(i, c) for i, c in con.coeffs)
        lines.append(f"{name}: {lhs} {con.relation} {con.rhs:.12g}")
    for i in range(lp.num_vars):
        if lp.lower[i] != 0.0 or lp.upper[i] is not None:
            hi = "inf" if lp.upper[i] is None else f"{lp.upper[i]:.12g}"
            lines.append(f"bounds: {lp.lower[i]:.12g} <= {lp.names[i]} <= {hi}")
    return "\n".join(lines) + "\n"


def solve_with_scipy(lp: LinearProgram, options: SimplexOptions | None = None) -> LpSolution:
    """External-solver adapter: scipy.optimize.linprog (HiGHS), sparse rows."""
    from scipy import sparse
    from scipy.optimize import linprog

    opts = options or SimplexOptions()
    c = lp.objective_vector()
    eq_rows, eq_rhs, ub_rows, ub_rhs = [], [], [], []
    for con in lp.constraints:
        if con.relation == "=":
            eq_rows.append(con.coeffs)
            eq_rhs.append(con.rhs)
        elif con.relation == "<=":
            ub_rows.append(con.coeffs)
            ub_rhs.append(con.rhs)
        else:
            ub_rows.append(tuple((i, -v) for i, v in con.coeffs))
            ub_rhs.append(-con.rhs)

    def to_sparse(rows):
        data, ri, ci = [], [], []
        for r, coeffs in enumerate(rows):
            for i, v in coeffs:
                ri.append(r)
                ci.append(i)
                data.append(v)
        return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), lp.num_vars))

    bounds = [(lp.lower[i], lp.upper[i]) for i in range(lp.num_vars)]
    result = linprog(
        c,
        A_ub=to_sparse(ub_rows) if ub_rows else None,
        b_ub=np.array(ub_rhs) if ub_rhs else None,
        A_eq=to_sparse(eq_rows) if eq_rows else None,
        b_eq=np.array(eq_rhs) if eq_rhs else None,
        bounds=bounds,
        method="highs",
    )
    status = {0: "optimal", 2: "infeasible", 3: "unbounded", 1: "iteration_limit"}.get(
        result.status, "iteration_limit"
    )
    if status != "optimal":
        return LpSolution(status, np.nan, np.full(lp.num_vars, np.nan), int(result.nit))
    report = check_solution(lp, result.x, opts.feas_tol)
    return LpSolution(
        "optimal",
        lp.objective_value(result.x),
        np.asarray(result.x, dtype=float),
        int(result.nit),
        {
            "max_constraint_violation": report.max_constraint_violation,
            "max_bound_violation": report.max_bound_violation,
            "solver": "scipy-highs",
        },
    )
