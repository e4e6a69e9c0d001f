"""Encoder shapes, padding, packing, and checkpoint round-trips."""

import numpy as np
import pytest
import torch

from ipdiff.encoders import (
    PAD_TOKEN,
    IPEncoder,
    SolutionEncoder,
    config_hash,
    load_checkpoint,
    make_padded_batch,
    pack_graphs,
    pad_embeddings,
    pad_solutions,
    save_checkpoint,
)
from ipdiff.featurize import build_bipartite

from conftest import tiny_instance


def graphs_for(seeds):
    return [build_bipartite(tiny_instance(s, "indep_set")) for s in seeds]


class TestPackGraphs:
    def test_sizes_and_offsets(self):
        gs = graphs_for([0, 1, 2])
        packed = pack_graphs(gs)
        assert packed.sizes == [g.n for g in gs]
        assert packed.var_feat.shape[0] == sum(g.n for g in gs)
        assert packed.cons_feat.shape[0] == sum(g.m for g in gs)
        assert packed.cons_index.max() < sum(g.m for g in gs)
        assert packed.var_index.max() < sum(g.n for g in gs)

    def test_single_graph(self):
        g = graphs_for([0])[0]
        packed = pack_graphs([g])
        assert packed.sizes == [g.n]
        assert len(packed.edge_coef) == len(g.edges)


class TestIPEncoder:
    def test_output_shapes(self):
        torch.manual_seed(0)
        enc = IPEncoder(dim=16)
        gs = graphs_for([0, 1])
        out = enc(pack_graphs(gs))
        assert len(out) == 2
        for z, g in zip(out, gs):
            assert z.shape == (g.n, 16)

    def test_batching_matches_single(self):
        torch.manual_seed(0)
        enc = IPEncoder(dim=16)
        gs = graphs_for([3, 4])
        with torch.no_grad():
            batched = enc(pack_graphs(gs))
            singles = [enc(pack_graphs([g]))[0] for g in gs]
        for zb, zs in zip(batched, singles):
            torch.testing.assert_close(zb, zs, rtol=1e-5, atol=1e-5)

    def test_deterministic(self):
        torch.manual_seed(0)
        enc = IPEncoder(dim=8)
        packed = pack_graphs(graphs_for([0]))
        with torch.no_grad():
            a = enc(packed)[0]
            b = enc(packed)[0]
        torch.testing.assert_close(a, b)


class TestSolutionEncoder:
    def test_output_shape(self):
        torch.manual_seed(0)
        enc = SolutionEncoder(dim=16)
        tokens = torch.tensor([[0, 1, 1, PAD_TOKEN]])
        assert enc(tokens).shape == (1, 4, 16)

    def test_rejects_bad_tokens(self):
        enc = SolutionEncoder(dim=16)
        with pytest.raises(ValueError, match="tokens"):
            enc(torch.tensor([[0, 3]]))
        with pytest.raises(ValueError, match="tokens"):
            enc(torch.tensor([[-1, 0]]))

    def test_rejects_overlong_sequence(self):
        enc = SolutionEncoder(dim=16, max_len=4)
        with pytest.raises(ValueError, match="max_len"):
            enc(torch.zeros((1, 5), dtype=torch.long))

    def test_different_solutions_different_embeddings(self):
        torch.manual_seed(0)
        enc = SolutionEncoder(dim=16)
        with torch.no_grad():
            a = enc(torch.tensor([[0, 1, 0]]))
            b = enc(torch.tensor([[1, 0, 0]]))
        assert not torch.allclose(a, b)


class TestPadding:
    def test_pad_embeddings_zero_fill(self):
        z = [torch.ones(2, 4), torch.ones(3, 4)]
        out, mask = pad_embeddings(z)
        assert out.shape == (2, 3, 4)
        assert mask.tolist() == [[True, True, False], [True, True, True]]
        assert torch.all(out[0, 2] == 0)

    def test_pad_solutions_pad_token(self):
        out = pad_solutions([np.array([1, 0]), np.array([1, 1, 0])])
        assert out.shape == (2, 3)
        assert out[0, 2] == PAD_TOKEN

    def test_make_padded_batch_common_length(self):
        z = [torch.ones(2, 4)]
        batch = make_padded_batch(z, [np.array([1, 0, 1])])
        assert batch.z_i.shape == (1, 3, 4)
        assert batch.tokens.shape == (1, 3)
        # mask follows the embedding rows
        assert batch.mask.tolist() == [[True, True, False]]

    def test_explicit_length(self):
        batch = make_padded_batch([torch.ones(2, 4)], [np.array([1, 0])], length=6)
        assert batch.z_i.shape == (1, 6, 4)


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        torch.manual_seed(0)
        enc = SolutionEncoder(dim=8)
        path = tmp_path / "ckpt.pt"
        save_checkpoint(path, {"enc": enc}, {"dim": 8}, extra={"note": "x"})
        payload = load_checkpoint(path)
        assert payload["config"] == {"dim": 8}
        assert payload["extra"] == {"note": "x"}
        clone = SolutionEncoder(dim=8)
        clone.load_state_dict(payload["state"]["enc"])
        enc.eval()
        clone.eval()
        tokens = torch.tensor([[0, 1]])
        with torch.no_grad():
            torch.testing.assert_close(enc(tokens), clone(tokens))

    def test_config_hash_stable_and_order_free(self):
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_creates_parent_dirs(self, tmp_path):
        path = tmp_path / "deep" / "dir" / "ckpt.pt"
        save_checkpoint(path, {}, {})
        assert path.exists()
