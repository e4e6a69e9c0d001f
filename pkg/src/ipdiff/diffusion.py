"""Noise schedule, conditional denoiser, solution decoder, and joint training.

The denoiser predicts the clean solution embedding directly (not the noise).
The decoder maps a predicted embedding plus the instance embedding to soft
bits in (0, 1).  Both train jointly on a three-part loss: embedding MSE,
per-bit cross-entropy of the decoded solution, and a differentiable
constraint-violation penalty on the soft bits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
import torch
from torch import Tensor, nn
from torch.nn import functional as F

from .cisp import CISPModel
from .dataset import InstanceRecord, sample_solution
from .encoders import load_checkpoint, make_padded_batch, save_checkpoint
from .instance import IPInstance


@dataclass(frozen=True)
class NoiseSchedule:
    """Linear beta schedule with cached alpha products (float64)."""

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def alpha_bar_at(self, t: int) -> float:
        """alpha_bar_t with the convention alpha_bar_0 = 1."""
        if not 0 <= t <= self.T:
            raise ValueError(f"t={t} outside [0, {self.T}]")
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])


def make_schedule(T: int, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    for arr in (beta, alpha, alpha_bar):
        arr.setflags(write=False)
    return NoiseSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def forward_noise(z0: Tensor, t, eps: Tensor, sched: NoiseSchedule) -> Tensor:
    """z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps; t may be per-sample."""
    if isinstance(t, Tensor):
        if (t < 1).any() or (t > sched.T).any():
            raise ValueError("t out of range [1, T]")
        abar = torch.as_tensor(
            np.array(sched.alpha_bar), dtype=z0.dtype, device=z0.device
        )[t - 1].reshape(-1, *([1] * (z0.dim() - 1)))
    else:
        if not 1 <= int(t) <= sched.T:
            raise ValueError(f"t={t} out of range [1, {sched.T}]")
        abar = torch.tensor(sched.alpha_bar[int(t) - 1], dtype=z0.dtype, device=z0.device)
    return torch.sqrt(abar) * z0 + torch.sqrt(1.0 - abar) * eps


class SinusoidalTimeEmbedding(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.proj = nn.Linear(dim, dim)

    def forward(self, t: Tensor) -> Tensor:
        """(B,) integer steps -> (B, dim)."""
        half = self.dim // 2
        freqs = torch.exp(
            -math.log(10000.0) * torch.arange(half, dtype=torch.get_default_dtype()) / half
        ).to(t.device)
        ang = t.float()[:, None] * freqs[None, :]
        emb = torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)
        return self.proj(emb.to(self.proj.weight.dtype))


class Denoiser(nn.Module):
    """Predicts the clean embedding from (noisy embedding, instance embedding, t)."""

    def __init__(self, dim: int = 32, nhead: int = 4, layers: int = 1):
        super().__init__()
        self.dim = dim
        self.time_embed = SinusoidalTimeEmbedding(dim)
        self.in_proj = nn.Linear(3 * dim, dim)
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=nhead, dim_feedforward=4 * dim, batch_first=True
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=layers)
        self.out = nn.Linear(dim, dim)

    def forward(self, z_t: Tensor, z_i: Tensor, t: Tensor) -> Tensor:
        if z_t.shape != z_i.shape:
            raise ValueError(f"shape mismatch: {tuple(z_t.shape)} vs {tuple(z_i.shape)}")
        temb = self.time_embed(t)[:, None, :].expand_as(z_t)
        h = self.in_proj(torch.cat([z_t, z_i, temb], dim=-1))
        return self.out(self.encoder(h))


class Decoder(nn.Module):
    """Maps (predicted embedding, instance embedding) to soft bits in (0, 1)."""

    def __init__(self, dim: int = 32, nhead: int = 4, layers: int = 2):
        super().__init__()
        self.in_proj = nn.Linear(2 * dim, dim)
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=nhead, dim_feedforward=4 * dim, batch_first=True
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=layers)
        self.out = nn.Linear(dim, 1)

    def forward(self, z_hat: Tensor, z_i: Tensor) -> Tensor:
        h = self.in_proj(torch.cat([z_hat, z_i], dim=-1))
        return torch.sigmoid(self.out(self.encoder(h)).squeeze(-1))


def round_solution(soft: Tensor) -> np.ndarray:
    """Threshold soft bits at 0.5; exact ties go to 0."""
    return (soft.detach().cpu().numpy() > 0.5).astype(np.int8)


def dense_tensors(inst: IPInstance, dtype=torch.float32) -> tuple[Tensor, Tensor, Tensor]:
    """(A, b, c) as dense torch tensors in the instance's authored sense."""
    A = torch.as_tensor(inst.dense_matrix(), dtype=dtype)
    b = torch.as_tensor(np.array(inst.b), dtype=dtype)
    c = torch.as_tensor(np.array(inst.c), dtype=dtype)
    return A, b, c


def soft_violation(A: Tensor, b: Tensor, x_soft: Tensor) -> Tensor:
    """Per-row hinge violations max(a_k.x - b_k, 0) for fractional x."""
    return torch.clamp(A @ x_soft - b, min=0.0)


@dataclass
class DiffusionConfig:
    dim: int = 32
    nhead: int = 4
    denoiser_layers: int = 1
    decoder_layers: int = 2
    T: int = 200
    beta_start: float = 1e-4
    beta_end: float = 0.02
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-3
    lam: float | str = "auto"   # "auto" = number of variables, per instance
    freeze_encoders: bool = True
    seed: int = 0


class DiffusionModel(nn.Module):
    """Denoiser + decoder pair sharing one noise schedule."""

    def __init__(self, config: DiffusionConfig):
        super().__init__()
        self.config = config
        self.denoiser = Denoiser(
            dim=config.dim, nhead=config.nhead, layers=config.denoiser_layers
        )
        self.decoder = Decoder(
            dim=config.dim, nhead=config.nhead, layers=config.decoder_layers
        )
        self.schedule = make_schedule(config.T, config.beta_start, config.beta_end)


def _lambda_for(inst: IPInstance, lam: float | str) -> float:
    return float(inst.n) if lam == "auto" else float(lam)


def joint_loss(
    z_x: Tensor,
    z_i: Tensor,
    tokens: Tensor,
    mask: Tensor,
    instances: Sequence[IPInstance],
    denoiser: Denoiser,
    decoder: Decoder,
    lam: float | str,
    sched: NoiseSchedule,
    t: Optional[Tensor] = None,
    eps: Optional[Tensor] = None,
    generator: Optional[torch.Generator] = None,
) -> dict[str, Tensor]:
    """Total loss and its parts for one padded batch.

    ``t`` and ``eps`` default to fresh uniform / Gaussian draws; pass them
    explicitly for deterministic evaluation (e.g. gradient checks).
    """
    B = z_x.shape[0]
    if t is None:
        t = torch.randint(1, sched.T + 1, (B,), generator=generator)
    if eps is None:
        eps = torch.randn(z_x.shape, generator=generator, dtype=z_x.dtype)
    z_t = forward_noise(z_x, t, eps, sched)
    z_hat = denoiser(z_t, z_i, t)
    x_soft = decoder(z_hat, z_i)

    real = mask.to(z_x.dtype)
    denom = real.sum() * z_x.shape[-1]
    mse = ((z_hat - z_x) ** 2 * real[:, :, None]).sum() / denom
    bits = tokens.clamp(max=1).to(z_x.dtype)
    ce_all = F.binary_cross_entropy(x_soft, bits, reduction="none")
    ce = (ce_all * real).sum() / real.sum()

    cv_terms = []
    for i, inst in enumerate(instances):
        A, b, _ = dense_tensors(inst, dtype=z_x.dtype)
        viol = soft_violation(A, b, x_soft[i, : inst.n])
        cv = viol.mean() if inst.m > 0 else x_soft.new_zeros(())
        cv_terms.append(_lambda_for(inst, lam) * cv)
    cv_weighted = torch.stack(cv_terms).mean()

    total = mse + ce + cv_weighted
    return {"total": total, "mse": mse, "ce": ce, "cv": cv_weighted}


def train_joint(
    records: Sequence[InstanceRecord],
    cisp_model: CISPModel,
    config: DiffusionConfig,
) -> tuple[DiffusionModel, list[dict[str, float]]]:
    """Train denoiser and decoder (and, if unfrozen, the encoders too).

    With ``freeze_encoders`` the CISP encoders are evaluated once up front;
    otherwise they join the optimizer, which is how the no-pretraining
    ablation trains encoders from scratch.
    """
    if not records:
        raise ValueError("empty dataset")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    model = DiffusionModel(config)
    params = list(model.parameters())
    if not config.freeze_encoders:
        params += list(cisp_model.parameters())
    opt = torch.optim.Adam(params, lr=config.lr)

    instances = [r.instance for r in records]
    if config.freeze_encoders:
        with torch.no_grad():
            z_i_all = cisp_model.embed_instances(instances)

    curve: list[dict[str, float]] = []
    for _ in range(config.epochs):
        order = rng.permutation(len(records))
        sols = [sample_solution(records[i], rng).values for i in order]
        epoch: dict[str, list[float]] = {"total": [], "mse": [], "ce": [], "cv": []}
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            batch_insts = [instances[i] for i in idx]
            batch_bits = [sols[start + o] for o in range(len(idx))]
            if config.freeze_encoders:
                z_list = [z_i_all[i] for i in idx]
            else:
                z_list = cisp_model.embed_instances(batch_insts)
            padded = make_padded_batch(z_list, batch_bits)
            if config.freeze_encoders:
                with torch.no_grad():
                    z_x = cisp_model.embed_solutions(padded.tokens)
            else:
                z_x = cisp_model.embed_solutions(padded.tokens)
            parts = joint_loss(
                z_x, padded.z_i, padded.tokens, padded.mask, batch_insts,
                model.denoiser, model.decoder, config.lam, model.schedule,
            )
            opt.zero_grad()
            parts["total"].backward()
            opt.step()
            for key in epoch:
                epoch[key].append(float(parts[key].detach()))
        curve.append({key: float(np.mean(vals)) for key, vals in epoch.items()})
    model.eval()
    cisp_model.eval()
    return model, curve


def save_diffusion(path, model: DiffusionModel, extra: dict | None = None) -> None:
    save_checkpoint(path, {"diffusion": model}, asdict(model.config), extra)


def load_diffusion(path) -> DiffusionModel:
    payload = load_checkpoint(path)
    cfg = payload["config"]
    model = DiffusionModel(DiffusionConfig(**cfg))
    model.load_state_dict(payload["state"]["diffusion"])
    model.eval()
    return model
