"""Experiment harnesses: guidance ablations, partial-solution completion,
and single-instance solution-distribution export.

All aggregates are recomputed from per-sample records; feasibility always
comes from the exact arithmetic in :mod:`ipdiff.instance`, never from the
sampler.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cisp import CISPModel
from .dataset import InstanceRecord
from .diffusion import DiffusionModel
from .guidance import GuidanceConfig, sample_many
from .instance import IPInstance, PartialAssignment, Solution
from .metrics import ExperimentReport, evaluate_pool
from .oracle import CompletionInfeasible, complete_solution, solve_exact

ABLATION_VARIANTS = (
    "unguided",
    "constraint_guided",
    "objective_guided",
    "ip_guided",
    "ip_guided_no_cisp",
)


def _variant_cfg(base: GuidanceConfig, variant: str) -> GuidanceConfig:
    if variant == "unguided":
        return replace(base, s=0.0)
    if variant == "constraint_guided":
        return replace(base, gamma=0.0)
    if variant == "objective_guided":
        return replace(base, gamma=1.0)
    return base  # ip_guided and ip_guided_no_cisp use the base (s, gamma)


def oracle_optima(
    instances: Sequence[IPInstance], node_limit: Optional[int] = None
) -> list[Optional[float]]:
    out = []
    for inst in instances:
        pool = solve_exact(inst, pool_cap=1, node_limit=node_limit)
        out.append(pool.best[1] if pool.best else None)
    return out


def run_ablation(
    instances: Sequence[IPInstance],
    cisp_model: CISPModel,
    model: DiffusionModel,
    base_cfg: GuidanceConfig,
    count: int = 30,
    no_cisp: Optional[tuple[CISPModel, DiffusionModel]] = None,
    node_limit: Optional[int] = None,
) -> list[dict]:
    """One row per sampling variant, pooled over all instances.

    The no-pretraining column is skipped (marked absent) unless its
    checkpoints are supplied.
    """
    optima = oracle_optima(instances, node_limit)
    rows = []
    for variant in ABLATION_VARIANTS:
        if variant == "ip_guided_no_cisp":
            if no_cisp is None:
                rows.append({"variant": variant, "absent": True})
                continue
            enc, diff = no_cisp
        else:
            enc, diff = cisp_model, model
        cfg = _variant_cfg(base_cfg, variant)
        per_instance = []
        for inst, opt in zip(instances, optima):
            samples = sample_many(inst, enc, diff, cfg, count, oracle_opt=opt)
            per_instance.append(evaluate_pool(inst, [s for s, _ in samples], opt))
        rows.append(_aggregate_row(variant, cfg, per_instance))
    return rows


def _aggregate_row(variant: str, cfg: GuidanceConfig, reports: Sequence[ExperimentReport]) -> dict:
    total = sum(r.sample_count for r in reports)
    feas = sum(r.feasible_count for r in reports)
    objs = [r.mean_objective for r in reports if r.mean_objective is not None]
    gaps = [r.mean_gap for r in reports if r.mean_gap is not None]
    return {
        "variant": variant,
        "s": cfg.s,
        "gamma": cfg.gamma,
        "sample_count": total,
        "feasible_ratio": feas / total if total else 0.0,
        "mean_objective": float(np.mean(objs)) if objs else None,
        "mean_gap": float(np.mean(gaps)) if gaps else None,
        "absent": False,
        "per_instance": list(reports),
    }


@dataclass
class PartialCompleteResult:
    """Direct complete samples vs oracle-completed partial fixes."""

    proportion: float
    direct: dict          # aggregate row over direct complete samples
    completed: dict       # aggregate row over completed partials
    infeasible_completions: int


def run_partial_complete(
    instances: Sequence[IPInstance],
    cisp_model: CISPModel,
    model: DiffusionModel,
    proportion: float,
    cfg: GuidanceConfig,
    count: int = 30,
    node_limit: Optional[int] = None,
) -> PartialCompleteResult:
    """Fix a random fraction of each sampled solution, complete it exactly.

    The fixed subset is uniform without replacement, of size
    floor(proportion * n).  Completions that conflict with the constraints
    count against the completed feasible ratio.
    """
    if not 0.0 < proportion <= 1.0:
        raise ValueError("proportion must be in (0, 1]")
    optima = oracle_optima(instances, node_limit)
    rng = np.random.default_rng(cfg.seed)
    direct_reports, completed_reports = [], []
    infeasible = 0
    for inst, opt in zip(instances, optima):
        samples = sample_many(inst, cisp_model, model, cfg, count, oracle_opt=opt)
        solutions = [s for s, _ in samples]
        direct_reports.append(evaluate_pool(inst, solutions, opt))
        k = int(proportion * inst.n)
        completions: list[Solution] = []
        for sol in solutions:
            mask = np.zeros(inst.n, dtype=bool)
            mask[rng.choice(inst.n, size=k, replace=False)] = True
            partial = PartialAssignment(fixed_mask=mask, values=sol.values)
            try:
                completions.append(complete_solution(inst, partial, node_limit))
            except CompletionInfeasible:
                infeasible += 1
                completions.append(sol)  # keep the (infeasible) sample in the tally
        completed_reports.append(evaluate_pool(inst, completions, opt))
    base = GuidanceConfig(variant=cfg.variant, steps=cfg.steps, s=cfg.s, gamma=cfg.gamma,
                          eta=cfg.eta, seed=cfg.seed)
    return PartialCompleteResult(
        proportion=proportion,
        direct=_aggregate_row("direct_complete", base, direct_reports),
        completed=_aggregate_row(f"partial_{proportion:g}_completed", base, completed_reports),
        infeasible_completions=infeasible,
    )


def export_histogram(
    inst: IPInstance,
    cisp_model: CISPModel,
    model: DiffusionModel,
    cfg: GuidanceConfig,
    count: int = 1000,
    node_limit: Optional[int] = None,
) -> tuple[list[float], Optional[float]]:
    """Objectives of feasible samples plus the oracle optimum marker."""
    opt = oracle_optima([inst], node_limit)[0]
    samples = sample_many(inst, cisp_model, model, cfg, count, oracle_opt=opt)
    objectives = [r.objective for _, r in samples if r.feasible]
    return objectives, opt


# ---------------------------------------------------------------------------
# delimited output


def write_ablation_csv(rows: Sequence[dict], path) -> None:
    fields = ["variant", "s", "gamma", "sample_count", "feasible_ratio",
              "mean_objective", "mean_gap", "absent"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fields})


def write_histogram_csv(objectives: Sequence[float], oracle_opt: Optional[float], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["objective", "is_oracle_optimum"])
        for obj in objectives:
            writer.writerow([obj, 0])
        if oracle_opt is not None:
            writer.writerow([oracle_opt, 1])


def write_curve_csv(curve: Sequence, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if curve and isinstance(curve[0], dict):
            keys = list(curve[0].keys())
            writer.writerow(["epoch"] + keys)
            for i, row in enumerate(curve):
                writer.writerow([i] + [row[k] for k in keys])
        else:
            writer.writerow(["epoch", "loss"])
            for i, val in enumerate(curve):
                writer.writerow([i, val])
