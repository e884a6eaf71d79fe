"""Generic ratio maximization by Dinkelbach's method.

``maximize_ratio`` drives any evaluator that, for a fixed ratio parameter q,
returns an argmax of N(x) - q*D(x) over a convex feasible set together with
the achieved numerator and denominator.  The q iterates are nondecreasing and
the loop stops once N - q*D < eps * D.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence


class SubproblemInfeasible(RuntimeError):
    """Parametric subproblem reported infeasible; carries the failing q."""

    def __init__(self, message: str, q: float, violated: Sequence[str] = ()):
        super().__init__(message)
        self.q = q
        self.violated = list(violated)


@dataclass
class RatioIteration:
    q: float
    numerator: float
    denominator: float
    residual: float  # numerator - q * denominator


@dataclass
class RatioResult:
    x_best: Any
    q_final: float
    numerator: float
    denominator: float
    residual: float
    iterations: int
    converged: bool
    trace: list[RatioIteration] = field(default_factory=list)


def maximize_ratio(evaluate: Callable[[float], tuple[Any, float, float]],
                   q0: float = 0.0, eps: float = 1e-6,
                   max_iters: int = 10) -> RatioResult:
    """Maximize N(x)/D(x) given an oracle for max_x N(x) - q*D(x).

    ``evaluate(q)`` must return (x, N(x), D(x)) with D > 0 on the feasible set
    and be deterministic in q.  Convergence is declared when |N - q*D| drops
    below eps*D (the residual is nonnegative in exact arithmetic whenever q
    starts at or below the optimal ratio; the absolute value also covers
    penalized numerators that start negative).  The returned q_final is N/D at
    the last iterate, so the q sequence is nondecreasing from any q0 <= q*.
    """
    if q0 < 0:
        raise ValueError("q0 must be >= 0")
    q = q0
    trace: list[RatioIteration] = []
    x = None
    num = den = 0.0
    converged = False
    for _ in range(max_iters):
        x, num, den = evaluate(q)
        if not den > 0:
            raise ValueError(f"denominator must be positive, got {den!r}")
        resid = num - q * den
        trace.append(RatioIteration(q=q, numerator=num, denominator=den, residual=resid))
        if abs(resid) < eps * den:
            converged = True
            q = num / den
            break
        q = num / den
    return RatioResult(x_best=x, q_final=num / den, numerator=num, denominator=den,
                       residual=trace[-1].residual, iterations=len(trace),
                       converged=converged, trace=trace)
