"""Dense linear programs and a thin deterministic solver front-end.

Every optimisation in the package (master problem, exact oracle, cut-search
subproblems) is expressed as a :class:`LinearProgram` and handed to
:func:`solve_lp`. The backend is the HiGHS dual simplex shipped with SciPy,
run single-threaded with tightened tolerances, so identical inputs give
bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import SolverError

FEAS_TOL = 1e-8
OPT_TOL = 1e-9

_RELATIONS = ("<=", "=", ">=")


@dataclass
class LinearProgram:
    """``sense`` c^T x subject to ``A x (rel) b`` and ``lo <= x <= hi``."""

    c: np.ndarray
    A: np.ndarray
    relations: list[str]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    sense: str = "max"
    names: list[str] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (n,)).copy()
        self.hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (n,)).copy()
        self.relations = list(self.relations)
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if self.A.shape[0] != self.b.shape[0] or len(self.relations) != self.b.shape[0]:
            raise ValueError("constraint rows, relations and rhs disagree in length")
        bad = set(self.relations) - set(_RELATIONS)
        if bad:
            raise ValueError(f"unknown relations {sorted(bad)}")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float
    x: np.ndarray | None
    iterations: int


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` and return a status-tagged solution.

    Raises
    ------
    SolverError
        If the backend stops for any reason other than optimality,
        infeasibility or unboundedness, or if the returned point violates the
        constraints by more than ``FEAS_TOL``.
    """
    rel = np.array(lp.relations, dtype=object)
    ub = rel != "="
    sign = np.where(rel == ">=", -1.0, 1.0)
    A_ub = (lp.A * sign[:, None])[ub]
    b_ub = (lp.b * sign)[ub]
    A_eq = lp.A[~ub]
    b_eq = lp.b[~ub]
    c = -lp.c if lp.sense == "max" else lp.c
    bounds = np.column_stack([lp.lo, lp.hi])
    bounds = [(None if np.isinf(l) else l, None if np.isinf(h) else h) for l, h in bounds]

    res = linprog(
        c,
        A_ub=A_ub if A_ub.size else None,
        b_ub=b_ub if A_ub.size else None,
        A_eq=A_eq if A_eq.size else None,
        b_eq=b_eq if A_eq.size else None,
        bounds=bounds,
        method="highs-ds",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": OPT_TOL,
            "presolve": True,
        },
    )
    nit = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        return LpSolution("infeasible", float("nan"), None, nit)
    if res.status == 3:
        return LpSolution("unbounded", float("inf") if lp.sense == "max" else -float("inf"), None, nit)
    if res.status != 0:
        raise SolverError(f"LP backend failed (status {res.status}): {res.message}")

    x = np.clip(np.asarray(res.x, dtype=float), lp.lo, lp.hi)
    ok, worst = check_feasible(lp, x, FEAS_TOL)
    if not ok:
        raise SolverError(f"LP solution violates constraints by {worst:.3e}")
    return LpSolution("optimal", float(lp.c @ x), x, nit)


def check_feasible(lp: LinearProgram, point, tol: float = FEAS_TOL) -> tuple[bool, float]:
    """Return ``(feasible, worst_residual)`` for ``point``.

    The residual is signed: strictly satisfied inequalities and bounds
    contribute negative slack, so an interior point reports a value <= 0.
    """
    x = np.asarray(point, dtype=float)
    if x.shape != (lp.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({lp.n},)")
    parts = [lp.lo - x, x - lp.hi]
    if lp.m:
        lhs = lp.A @ x
        rel = np.array(lp.relations, dtype=object)
        r = np.where(rel == "<=", lhs - lp.b, np.where(rel == ">=", lp.b - lhs, np.abs(lhs - lp.b)))
        parts.append(r)
    finite = np.concatenate(parts)
    finite = finite[np.isfinite(finite)]
    worst = float(finite.max()) if finite.size else 0.0
    return worst <= tol, worst


def format_lp(lp: LinearProgram) -> str:
    """Plain-text dump, one constraint per line. Debugging aid only."""
    names = lp.names or [f"x{j}" for j in range(lp.n)]

    def expr(coefs):
        terms = [f"{v:+.12g} {names[j]}" for j, v in enumerate(coefs) if v != 0.0]
        return " ".join(terms) if terms else "0"

    lines = [f"{lp.sense} {expr(lp.c)}", "subject to"]
    for i in range(lp.m):
        lines.append(f"  r{i}: {expr(lp.A[i])} {lp.relations[i]} {lp.b[i]:.12g}")
    lines.append("bounds")
    for j in range(lp.n):
        lines.append(f"  {lp.lo[j]:.12g} <= {names[j]} <= {lp.hi[j]:.12g}")
    return "\n".join(lines) + "\n"
