"""Bipartite variable/constraint graph with static node and edge features.

Only features derivable from (c, A, b) are produced; search- or LP-state
features are deliberately absent.  Per-row quantities are normalized by the
row's L2 norm, the objective coefficient by ||c||_2, so rescaling any single
constraint (row and rhs together) leaves its features unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .instance import IPInstance

VAR_FEATURES = [
    "type_binary", "type_integer", "type_impl_integer", "type_continuous",
    "coef", "has_lb", "has_ub",
]
CONS_FEATURES = ["obj_cos_sim", "bias"]


@dataclass(frozen=True)
class BipartiteGraph:
    var_features: np.ndarray          # (n, len(VAR_FEATURES))
    cons_features: np.ndarray         # (m, len(CONS_FEATURES))
    edges: tuple[tuple[int, int, float], ...]  # (cons_index, var_index, coef/||a_k||)
    var_feature_names: tuple[str, ...] = tuple(VAR_FEATURES)
    cons_feature_names: tuple[str, ...] = tuple(CONS_FEATURES)

    @property
    def n(self) -> int:
        return self.var_features.shape[0]

    @property
    def m(self) -> int:
        return self.cons_features.shape[0]


def build_bipartite(inst: IPInstance) -> BipartiteGraph:
    c = np.asarray(inst.c)
    c_norm = float(np.linalg.norm(c))
    var_feat = np.zeros((inst.n, len(VAR_FEATURES)))
    var_feat[:, 0] = 1.0  # every variable is binary
    var_feat[:, 4] = c / c_norm if c_norm > 0 else 0.0
    var_feat[:, 5] = 1.0
    var_feat[:, 6] = 1.0

    cons_feat = np.zeros((inst.m, len(CONS_FEATURES)))
    edges: list[tuple[int, int, float]] = []
    for k, row in enumerate(inst.rows):
        a = np.zeros(inst.n)
        for j, coef in row:
            a[j] += coef
        row_norm = float(np.linalg.norm(a))
        if row_norm == 0.0:
            raise ValueError(f"constraint row {k} has zero norm")
        cons_feat[k, 0] = float(a @ c) / (row_norm * c_norm) if c_norm > 0 else 0.0
        cons_feat[k, 1] = inst.b[k] / row_norm
        for j in np.flatnonzero(a):
            edges.append((k, int(j), float(a[j]) / row_norm))
    return BipartiteGraph(
        var_features=var_feat, cons_features=cons_feat, edges=tuple(edges)
    )


def dump_graph(graph: BipartiteGraph, path) -> None:
    payload = {
        "var_feature_names": list(graph.var_feature_names),
        "cons_feature_names": list(graph.cons_feature_names),
        "var_features": graph.var_features.tolist(),
        "cons_features": graph.cons_features.tolist(),
        "edges": [[k, j, coef] for k, j, coef in graph.edges],
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
