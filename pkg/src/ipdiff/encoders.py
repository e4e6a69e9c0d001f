"""Instance and solution encoders producing per-variable embeddings.

The instance side is a bipartite graph network: one full round of
constraint -> variable and variable -> constraint message passing with
residual connections and layer norm, emitting one d-vector per variable.
The solution side is a token-embedded transformer encoder over the bits,
with token 2 reserved for padding.  Both emit (n, d) with a shared d so the
contrastive stage can compare them by flattened cosine similarity.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import Tensor, nn

from .featurize import CONS_FEATURES, VAR_FEATURES, BipartiteGraph

PAD_TOKEN = 2


@dataclass
class PackedGraphs:
    """Several bipartite graphs packed into one disjoint union."""

    var_feat: Tensor       # (total_vars, d_v)
    cons_feat: Tensor      # (total_cons, d_c)
    cons_index: Tensor     # (E,) global constraint id per edge
    var_index: Tensor      # (E,) global variable id per edge
    edge_coef: Tensor      # (E,)
    sizes: list[int]       # variables per graph, in pack order


def pack_graphs(graphs: Sequence[BipartiteGraph], dtype=torch.float32) -> PackedGraphs:
    var_blocks, cons_blocks = [], []
    cons_idx, var_idx, coefs = [], [], []
    var_off = cons_off = 0
    sizes = []
    for g in graphs:
        var_blocks.append(torch.as_tensor(g.var_features, dtype=dtype))
        cons_blocks.append(torch.as_tensor(g.cons_features, dtype=dtype))
        for k, j, coef in g.edges:
            cons_idx.append(cons_off + k)
            var_idx.append(var_off + j)
            coefs.append(coef)
        sizes.append(g.n)
        var_off += g.n
        cons_off += g.m
    return PackedGraphs(
        var_feat=torch.cat(var_blocks),
        cons_feat=torch.cat(cons_blocks) if cons_off else torch.zeros((0, len(CONS_FEATURES)), dtype=dtype),
        cons_index=torch.tensor(cons_idx, dtype=torch.long),
        var_index=torch.tensor(var_idx, dtype=torch.long),
        edge_coef=torch.tensor(coefs, dtype=dtype),
        sizes=sizes,
    )


class IPEncoder(nn.Module):
    """Bipartite graph network over (variable, constraint) nodes."""

    def __init__(self, dim: int = 32, rounds: int = 1):
        super().__init__()
        self.dim = dim
        self.rounds = rounds
        self.var_embed = nn.Linear(len(VAR_FEATURES), dim)
        self.cons_embed = nn.Linear(len(CONS_FEATURES), dim)
        self.to_cons_msg = nn.ModuleList(nn.Linear(dim, dim) for _ in range(rounds))
        self.cons_update = nn.ModuleList(nn.Linear(2 * dim, dim) for _ in range(rounds))
        self.cons_norm = nn.ModuleList(nn.LayerNorm(dim) for _ in range(rounds))
        self.to_var_msg = nn.ModuleList(nn.Linear(dim, dim) for _ in range(rounds))
        self.var_update = nn.ModuleList(nn.Linear(2 * dim, dim) for _ in range(rounds))
        self.var_norm = nn.ModuleList(nn.LayerNorm(dim) for _ in range(rounds))
        self.out = nn.Linear(dim, dim)

    def forward(self, packed: PackedGraphs) -> list[Tensor]:
        """Per-graph (n_g, dim) variable embeddings."""
        h_v = torch.relu(self.var_embed(packed.var_feat))
        h_c = torch.relu(self.cons_embed(packed.cons_feat))
        w = packed.edge_coef.unsqueeze(1)
        for r in range(self.rounds):
            msg = torch.zeros_like(h_c)
            msg.index_add_(0, packed.cons_index, w * self.to_cons_msg[r](h_v)[packed.var_index])
            h_c = self.cons_norm[r](h_c + torch.relu(self.cons_update[r](torch.cat([h_c, msg], dim=1))))
            msg = torch.zeros_like(h_v)
            msg.index_add_(0, packed.var_index, w * self.to_var_msg[r](h_c)[packed.cons_index])
            h_v = self.var_norm[r](h_v + torch.relu(self.var_update[r](torch.cat([h_v, msg], dim=1))))
        z = self.out(h_v)
        return list(torch.split(z, packed.sizes))


class SolutionEncoder(nn.Module):
    """Transformer encoder over {0,1,pad} tokens with learned positions."""

    def __init__(self, dim: int = 32, nhead: int = 4, layers: int = 1, max_len: int = 512):
        super().__init__()
        self.dim = dim
        self.max_len = max_len
        self.token_embed = nn.Embedding(3, dim)
        self.pos_embed = nn.Embedding(max_len, dim)
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=nhead, dim_feedforward=4 * dim, batch_first=True
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=layers)

    def forward(self, tokens: Tensor) -> Tensor:
        """(B, L) tokens in {0,1,2} -> (B, L, dim)."""
        if tokens.max() > PAD_TOKEN or tokens.min() < 0:
            raise ValueError("tokens must be in {0, 1, 2}")
        if tokens.shape[1] > self.max_len:
            raise ValueError(f"sequence length {tokens.shape[1]} exceeds max_len {self.max_len}")
        pos = torch.arange(tokens.shape[1], device=tokens.device)
        h = self.token_embed(tokens) + self.pos_embed(pos)[None, :, :]
        return self.encoder(h)


@dataclass
class PaddedBatch:
    """Common-length batch: zero-padded z_i, token-2-padded bits, validity mask."""

    z_i: Tensor        # (B, L, d), padding rows exactly zero
    tokens: Tensor     # (B, L) in {0,1,2}
    mask: Tensor       # (B, L) bool, True on real positions


def pad_embeddings(z_list: Sequence[Tensor], length: int | None = None) -> tuple[Tensor, Tensor]:
    """Stack variable-length (n, d) embeddings with zero rows appended."""
    L = length or max(z.shape[0] for z in z_list)
    d = z_list[0].shape[1]
    out = torch.zeros((len(z_list), L, d), dtype=z_list[0].dtype)
    mask = torch.zeros((len(z_list), L), dtype=torch.bool)
    for i, z in enumerate(z_list):
        out[i, : z.shape[0]] = z
        mask[i, : z.shape[0]] = True
    return out, mask


def pad_solutions(bit_arrays: Sequence[np.ndarray], length: int | None = None) -> Tensor:
    L = length or max(len(v) for v in bit_arrays)
    out = torch.full((len(bit_arrays), L), PAD_TOKEN, dtype=torch.long)
    for i, v in enumerate(bit_arrays):
        out[i, : len(v)] = torch.as_tensor(np.asarray(v, dtype=np.int64))
    return out


def make_padded_batch(
    z_list: Sequence[Tensor], bit_arrays: Sequence[np.ndarray], length: int | None = None
) -> PaddedBatch:
    L = length or max(max(z.shape[0] for z in z_list), max(len(v) for v in bit_arrays))
    z_i, mask = pad_embeddings(z_list, L)
    tokens = pad_solutions(bit_arrays, L)
    return PaddedBatch(z_i=z_i, tokens=tokens, mask=mask)


# ---------------------------------------------------------------------------
# checkpoints


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def save_checkpoint(path, modules: dict[str, nn.Module], config: dict, extra: dict | None = None) -> None:
    payload = {
        "config": config,
        "config_hash": config_hash(config),
        "state": {name: mod.state_dict() for name, mod in modules.items()},
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path) -> dict:
    return torch.load(path, map_location="cpu", weights_only=False)
