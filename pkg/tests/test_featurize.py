"""Bipartite featurization invariants."""

import json

import numpy as np
import pytest

from ipdiff.featurize import (
    CONS_FEATURES,
    VAR_FEATURES,
    build_bipartite,
    dump_graph,
)
from ipdiff.instance import IPInstance

from conftest import tiny_instance


class TestBuildBipartite:
    def test_shapes(self):
        inst = tiny_instance(0, "set_cover")
        g = build_bipartite(inst)
        assert g.var_features.shape == (inst.n, len(VAR_FEATURES))
        assert g.cons_features.shape == (inst.m, len(CONS_FEATURES))
        assert g.n == inst.n
        assert g.m == inst.m

    def test_variable_type_and_bound_flags(self):
        g = build_bipartite(tiny_instance(1, "indep_set"))
        np.testing.assert_array_equal(g.var_features[:, 0], 1.0)  # binary
        np.testing.assert_array_equal(g.var_features[:, 1:4], 0.0)
        np.testing.assert_array_equal(g.var_features[:, 5:], 1.0)  # lb and ub

    def test_objective_coefficient_normalized(self):
        inst = IPInstance(
            name="t", n=2, c=np.array([3.0, 4.0]),
            rows=(((0, 1.0),),), b=np.array([1.0]),
        )
        g = build_bipartite(inst)
        np.testing.assert_allclose(g.var_features[:, 4], [0.6, 0.8])

    def test_row_scale_invariance(self):
        base = IPInstance(
            name="a", n=2, c=np.array([1.0, 2.0]),
            rows=(((0, 1.0), (1, 2.0)),), b=np.array([3.0]),
        )
        scaled = IPInstance(
            name="a", n=2, c=np.array([1.0, 2.0]),
            rows=(((0, 10.0), (1, 20.0)),), b=np.array([30.0]),
        )
        ga, gs = build_bipartite(base), build_bipartite(scaled)
        np.testing.assert_allclose(ga.cons_features, gs.cons_features)
        for (k1, j1, c1), (k2, j2, c2) in zip(ga.edges, gs.edges):
            assert (k1, j1) == (k2, j2)
            assert c1 == pytest.approx(c2)

    def test_cosine_feature(self):
        # row aligned with the objective has cosine 1
        inst = IPInstance(
            name="t", n=2, c=np.array([1.0, 1.0]),
            rows=(((0, 2.0), (1, 2.0)),), b=np.array([1.0]),
        )
        g = build_bipartite(inst)
        assert g.cons_features[0, 0] == pytest.approx(1.0)

    def test_bias_feature(self):
        inst = IPInstance(
            name="t", n=2, c=np.array([1.0, 0.0]),
            rows=(((0, 3.0), (1, 4.0)),), b=np.array([10.0]),
        )
        g = build_bipartite(inst)
        assert g.cons_features[0, 1] == pytest.approx(2.0)

    def test_zero_objective_fallback(self):
        inst = IPInstance(
            name="t", n=2, c=np.zeros(2),
            rows=(((0, 1.0),),), b=np.array([1.0]),
        )
        g = build_bipartite(inst)
        np.testing.assert_array_equal(g.var_features[:, 4], 0.0)
        assert g.cons_features[0, 0] == 0.0

    def test_zero_row_rejected(self):
        inst = IPInstance(
            name="t", n=2, c=np.array([1.0, 1.0]),
            rows=(((0, 1.0), (0, -1.0)),), b=np.array([1.0]),
        )
        with pytest.raises(ValueError, match="zero norm"):
            build_bipartite(inst)

    def test_edges_reference_valid_nodes(self):
        g = build_bipartite(tiny_instance(2, "set_cover"))
        for k, j, coef in g.edges:
            assert 0 <= k < g.m
            assert 0 <= j < g.n
            assert np.isfinite(coef)


class TestDumpGraph:
    def test_json_round_trip(self, tmp_path):
        g = build_bipartite(tiny_instance(0, "indep_set"))
        path = tmp_path / "graph.json"
        dump_graph(g, path)
        payload = json.loads(path.read_text())
        assert payload["var_feature_names"] == list(VAR_FEATURES)
        assert len(payload["var_features"]) == g.n
        assert len(payload["edges"]) == len(g.edges)
