"""Contrastive pretraining aligning instance and solution embeddings.

Matching (instance, solution) pairs within a mini-batch are positives, all
other pairings are negatives.  Similarities are cosines of the flattened
(n, d) embeddings scaled by a learnable exp-parameterized temperature, and
the loss is the symmetric cross-entropy over rows and columns.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import torch
from torch import Tensor, nn
from torch.nn import functional as F

from .dataset import InstanceRecord, sample_solution
from .encoders import (
    IPEncoder,
    SolutionEncoder,
    load_checkpoint,
    make_padded_batch,
    pack_graphs,
    save_checkpoint,
)
from .featurize import build_bipartite
from .instance import IPInstance


@dataclass
class CISPConfig:
    dim: int = 32
    nhead: int = 4
    sol_layers: int = 1
    gcn_rounds: int = 1
    max_len: int = 512
    epochs: int = 100
    batch_size: int = 64
    lr: float = 1e-3
    lr_decay: float = 0.9
    lr_decay_every: int = 100
    seed: int = 0


class CISPModel(nn.Module):
    """Encoder pair plus the learnable contrastive temperature."""

    def __init__(self, config: CISPConfig):
        super().__init__()
        self.config = config
        self.ip_encoder = IPEncoder(dim=config.dim, rounds=config.gcn_rounds)
        self.sol_encoder = SolutionEncoder(
            dim=config.dim, nhead=config.nhead, layers=config.sol_layers,
            max_len=config.max_len,
        )
        self.tau = nn.Parameter(torch.zeros(()))

    def embed_instances(self, instances: Sequence[IPInstance]) -> list[Tensor]:
        packed = pack_graphs([build_bipartite(inst) for inst in instances],
                             dtype=next(self.parameters()).dtype)
        return self.ip_encoder(packed)

    def embed_solutions(self, tokens: Tensor) -> Tensor:
        return self.sol_encoder(tokens)


def similarity_matrix(z_i: Tensor, z_x: Tensor, tau: Tensor | float) -> Tensor:
    """Pairwise cosine similarities of flattened embeddings, scaled by e^tau."""
    if z_i.shape != z_x.shape:
        raise ValueError(f"shape mismatch: {tuple(z_i.shape)} vs {tuple(z_x.shape)}")
    a = z_i.reshape(z_i.shape[0], -1)
    b = z_x.reshape(z_x.shape[0], -1)
    a_norm = a.norm(dim=1, keepdim=True)
    b_norm = b.norm(dim=1, keepdim=True)
    if (a_norm == 0).any() or (b_norm == 0).any():
        raise ValueError("zero-norm flattened embedding; encoder output is degenerate")
    tau_t = tau if isinstance(tau, Tensor) else torch.tensor(float(tau))
    return torch.exp(tau_t) * (a / a_norm) @ (b / b_norm).T


def cisp_loss(s: Tensor) -> Tensor:
    """Symmetric cross-entropy with the identity pairing as labels."""
    if s.shape[0] != s.shape[1]:
        raise ValueError("similarity matrix must be square")
    labels = torch.arange(s.shape[0], device=s.device)
    return (F.cross_entropy(s, labels) + F.cross_entropy(s.T, labels)) / 2


def train_cisp(
    records: Sequence[InstanceRecord], config: CISPConfig
) -> tuple[CISPModel, list[float]]:
    """Train the encoder pair; returns the model and the per-epoch loss curve."""
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    model = CISPModel(config)
    opt = torch.optim.AdamW(model.parameters(), lr=config.lr)
    sched = torch.optim.lr_scheduler.StepLR(
        opt, step_size=config.lr_decay_every, gamma=config.lr_decay
    )
    graphs = [build_bipartite(r.instance) for r in records]
    curve: list[float] = []
    batch = min(config.batch_size, len(records))
    for _ in range(config.epochs):
        order = rng.permutation(len(records))
        losses = []
        for start in range(0, len(records), batch):
            idx = order[start : start + batch]
            packed = pack_graphs([graphs[i] for i in idx])
            z_list = model.ip_encoder(packed)
            sols = [sample_solution(records[i], rng).values for i in idx]
            padded = make_padded_batch(z_list, sols)
            z_x = model.sol_encoder(padded.tokens)
            loss = cisp_loss(similarity_matrix(padded.z_i, z_x, model.tau))
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
        sched.step()
        curve.append(float(np.mean(losses)) if losses else 0.0)
    model.eval()
    return model, curve


def save_cisp(path, model: CISPModel, extra: dict | None = None) -> None:
    save_checkpoint(path, {"cisp": model}, asdict(model.config), extra)


def load_cisp(path) -> CISPModel:
    payload = load_checkpoint(path)
    model = CISPModel(CISPConfig(**payload["config"]))
    model.load_state_dict(payload["state"]["cisp"])
    model.eval()
    return model
