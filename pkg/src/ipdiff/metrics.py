"""Sample-pool evaluation: feasible ratio, mean objective, mean gap."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .instance import (
    EvalReport,
    IPInstance,
    Solution,
    gap,
    is_feasible,
    objective_value,
    violation_sum,
)


@dataclass
class ExperimentReport:
    """Aggregate metrics over one instance's sampled solutions.

    Objective and gap summarize feasible samples only and are None when no
    sample is feasible (or, for the gap, when no reference optimum exists).
    """

    sample_count: int
    feasible_count: int
    feasible_ratio: float
    mean_objective: Optional[float]
    mean_gap: Optional[float]
    oracle_objective: Optional[float] = None
    gap_out_of_range_count: int = 0
    reports: list[EvalReport] = field(default_factory=list)


def evaluate_solution(
    inst: IPInstance, sol: Solution, oracle_opt: Optional[float] = None
) -> EvalReport:
    obj = objective_value(inst, sol)
    feas = is_feasible(inst, sol)
    g = gap(obj, oracle_opt) if (oracle_opt is not None and feas) else None
    return EvalReport(
        objective=obj,
        feasible=feas,
        violation_sum=violation_sum(inst, sol),
        gap=g,
        gap_out_of_range=bool(g is not None and g > 1.0),
    )


def evaluate_pool(
    inst: IPInstance,
    solutions: Sequence[Solution],
    oracle_opt: Optional[float] = None,
) -> ExperimentReport:
    """Metrics for a set of sampled solutions; feasibility re-derived here."""
    if not solutions:
        raise ValueError("need at least one solution to evaluate")
    reports = [evaluate_solution(inst, sol, oracle_opt) for sol in solutions]
    feasible = [r for r in reports if r.feasible]
    gaps = [r.gap for r in feasible if r.gap is not None]
    return ExperimentReport(
        sample_count=len(reports),
        feasible_count=len(feasible),
        feasible_ratio=len(feasible) / len(reports),
        mean_objective=float(np.mean([r.objective for r in feasible])) if feasible else None,
        mean_gap=float(np.mean(gaps)) if gaps else None,
        oracle_objective=oracle_opt,
        gap_out_of_range_count=sum(r.gap_out_of_range for r in reports),
        reports=reports,
    )
