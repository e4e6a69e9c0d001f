"""Exact branch-and-bound oracle for desk-scale 0-1 programs.

Depth-first search over a fixed branching order (descending |c_j|, then
index) with an LP-free objective bound: the fixed contribution plus the sum
of negative objective coefficients over the still-free variables.  Pruning is
relaxed so the search keeps the ``pool_cap`` best distinct feasible solutions
rather than only the incumbent.  Everything runs on the canonical
minimization form; reported objectives are in the authored sense.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .instance import (
    MAX,
    IPInstance,
    PartialAssignment,
    Solution,
    canonicalize,
    is_feasible,
)

OPTIMAL = "optimal"
LIMIT_REACHED = "limit_reached"
INFEASIBLE = "infeasible"


class CompletionInfeasible(Exception):
    """Fixed variables make the residual program infeasible."""


class OracleLimit(Exception):
    """Node limit exhausted before any feasible completion was found."""


@dataclass
class SolvePool:
    """Best-first feasible solutions; objectives in the instance's authored sense."""

    solutions: list[tuple[Solution, float]]
    status: str
    explored_nodes: int = 0

    @property
    def best(self) -> Optional[tuple[Solution, float]]:
        return self.solutions[0] if self.solutions else None


class _Search:
    """DFS state shared across the recursion; one instance per solve."""

    def __init__(self, inst: IPInstance, pool_cap: int, node_limit: Optional[int]):
        self.n = inst.n
        self.c = np.asarray(inst.c)
        self.b = np.asarray(inst.b)
        self.rows = inst.rows
        self.pool_cap = pool_cap
        self.node_limit = node_limit
        self.nodes = 0
        self.hit_limit = False
        # branch order: descending |c_j|, index as tie-break
        self.order = sorted(range(self.n), key=lambda j: (-abs(self.c[j]), j))
        # suffix sums of min(0, c_j) along the branch order
        neg = np.array([min(0.0, self.c[j]) for j in self.order])
        self.neg_suffix = np.concatenate([np.cumsum(neg[::-1])[::-1], [0.0]])
        # per-row running activity and minimum achievable remaining activity
        self.activity = np.zeros(len(self.rows))
        self.min_rest = np.array(
            [sum(min(0.0, a) for _, a in row) for row in self.rows]
        )
        self.rows_of_var: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for k, row in enumerate(self.rows):
            for j, a in row:
                self.rows_of_var[j].append((k, a))
        self.assign = np.zeros(self.n, dtype=np.int8)
        # pool entries keyed (objective, bits) for deterministic tie-breaking
        self.keys: list[tuple[float, tuple[int, ...]]] = []

    def run(self) -> None:
        self._dfs(0, 0.0)

    def _worst_kept(self) -> Optional[float]:
        if len(self.keys) < self.pool_cap:
            return None
        return self.keys[-1][0]

    def _dfs(self, depth: int, obj_fix: float) -> None:
        if self.hit_limit:
            return
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            self.hit_limit = True
            return
        # infeasibility: some row can no longer be satisfied
        if np.any(self.activity + self.min_rest > self.b + 1e-9):
            return
        if depth == self.n:
            if np.any(self.activity > self.b):
                return
            key = (obj_fix, tuple(int(v) for v in self.assign))
            pos = bisect.bisect_left(self.keys, key)
            if pos < len(self.keys) and self.keys[pos] == key:
                return
            self.keys.insert(pos, key)
            if len(self.keys) > self.pool_cap:
                self.keys.pop()
            return
        bound = obj_fix + self.neg_suffix[depth]
        worst = self._worst_kept()
        if worst is not None and bound > worst:
            return
        j = self.order[depth]
        # explore the objective-improving value first
        first = 1 if self.c[j] < 0 else 0
        for value in (first, 1 - first):
            self.assign[j] = value
            for k, a in self.rows_of_var[j]:
                self.activity[k] += a * value
                self.min_rest[k] -= min(0.0, a)
            self._dfs(depth + 1, obj_fix + self.c[j] * value)
            for k, a in self.rows_of_var[j]:
                self.activity[k] -= a * value
                self.min_rest[k] += min(0.0, a)
        self.assign[j] = 0


def solve_exact(
    inst: IPInstance, pool_cap: int = 50, node_limit: Optional[int] = None
) -> SolvePool:
    """Collect up to ``pool_cap`` best distinct feasible solutions.

    With ``status == "optimal"`` the first pool entry attains the true
    optimum.  Hitting ``node_limit`` returns the best-found pool with
    ``status == "limit_reached"``.
    """
    if pool_cap < 1:
        raise ValueError("pool_cap must be >= 1")
    canon = canonicalize(inst)
    search = _Search(canon, pool_cap, node_limit)
    search.run()
    flip = inst.sense == MAX
    solutions = [
        (Solution(np.array(bits, dtype=np.int8)), -obj if flip else obj)
        for obj, bits in search.keys
    ]
    if search.hit_limit:
        status = LIMIT_REACHED
    elif not solutions:
        status = INFEASIBLE
    else:
        status = OPTIMAL
    return SolvePool(solutions=solutions, status=status, explored_nodes=search.nodes)


def complete_solution(
    inst: IPInstance, partial: PartialAssignment, node_limit: Optional[int] = None
) -> Solution:
    """Best completion of ``partial``: fix masked variables, solve the rest.

    Raises :class:`CompletionInfeasible` when the fixes conflict with the
    constraints, and :class:`OracleLimit` when the node budget runs out
    before any feasible completion is found.
    """
    if len(partial) != inst.n:
        raise ValueError(f"partial has {len(partial)} entries, instance has n={inst.n}")
    mask = partial.fixed_mask
    fixed_vals = partial.values
    free = np.flatnonzero(~mask)
    if len(free) == 0:
        sol = Solution(fixed_vals.copy())
        if not is_feasible(inst, sol):
            raise CompletionInfeasible("fully fixed assignment violates constraints")
        return sol
    new_index = {int(j): i for i, j in enumerate(free)}
    rows = []
    b = []
    for k, row in enumerate(inst.rows):
        shift = sum(a * fixed_vals[j] for j, a in row if mask[j])
        residual = tuple((new_index[j], a) for j, a in row if not mask[j])
        rhs = inst.b[k] - shift
        if residual:
            rows.append(residual)
            b.append(rhs)
        elif rhs < 0:
            raise CompletionInfeasible(f"row {k} violated by the fixed variables")
    sub = IPInstance(
        name=f"{inst.name}/residual",
        n=len(free), c=inst.c[free], rows=tuple(rows), b=np.array(b),
        sense=inst.sense,
    )
    pool = solve_exact(sub, pool_cap=1, node_limit=node_limit)
    if pool.status == INFEASIBLE:
        raise CompletionInfeasible("residual program has no feasible assignment")
    if pool.best is None:
        raise OracleLimit("node limit reached before a completion was found")
    full = fixed_vals.astype(np.int8).copy()
    full[free] = pool.best[0].values
    return Solution(full)
