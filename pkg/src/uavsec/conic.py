"""Thin boundary to the conic optimization backend.

Every program in this package is built as a cvxpy Problem with Parameters so
repeated solves (Dinkelbach and SCA sweeps) reuse one canonicalization.  The
backend order is CLARABEL first (interior point: accurate duality gaps, exact
enough for the rank checks) with SCS as fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp

_SOLVER_CHAIN = (
    (cp.CLARABEL, {"max_iter": 200}),
    (cp.SCS, {"eps_abs": 1e-8, "eps_rel": 1e-8, "max_iters": 100_000}),
)

OPTIMAL_STATUSES = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
INFEASIBLE_STATUSES = (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE)


class ConicSolveError(RuntimeError):
    pass


@dataclass
class ConicStatus:
    status: str
    optimal: bool
    infeasible: bool
    objective: float | None
    solver: str


def solve(problem: cp.Problem, prefer: str | None = None) -> ConicStatus:
    """Solve in place; returns the status instead of raising on infeasibility."""
    chain = _SOLVER_CHAIN
    if prefer is not None:
        chain = tuple(item for item in _SOLVER_CHAIN if item[0] == prefer) + tuple(
            item for item in _SOLVER_CHAIN if item[0] != prefer)
    last_exc: Exception | None = None
    for solver, opts in chain:
        try:
            problem.solve(solver=solver, **opts)
        except (cp.SolverError, Exception) as exc:  # backend crashes fall through
            last_exc = exc
            continue
        if problem.status in OPTIMAL_STATUSES or problem.status in INFEASIBLE_STATUSES \
                or problem.status == cp.UNBOUNDED:
            return ConicStatus(status=problem.status,
                               optimal=problem.status in OPTIMAL_STATUSES,
                               infeasible=problem.status in INFEASIBLE_STATUSES,
                               objective=problem.value if problem.value is not None else None,
                               solver=solver)
    raise ConicSolveError(f"all conic backends failed (last error: {last_exc})")
