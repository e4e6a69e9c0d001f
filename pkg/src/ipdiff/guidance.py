"""Guided reverse-diffusion samplers for 0-1 program solutions.

Guidance differentiates a convex combination of soft constraint violation
and soft objective value through the decoder with respect to the current
latent, and uses that gradient to shift each reverse step: as a mean shift
for the ancestral (DDPM) sampler, and as a correction to the predicted noise
for the non-Markovian (DDIM) sampler.  With gradient scale 0 both samplers
reduce exactly to their unguided counterparts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch
from torch import Tensor

from .cisp import CISPModel
from .diffusion import (
    Decoder,
    DiffusionModel,
    NoiseSchedule,
    dense_tensors,
    round_solution,
)
from .instance import (
    EvalReport,
    IPInstance,
    Solution,
    canonicalize,
    gap,
    is_feasible,
    objective_value,
    violation_sum,
)

# Reference large-scale (s, gamma) settings per family; small runs re-tune.
LARGE_SCALE_PRESETS = {
    "ddim": {
        "set_cover_2000": (100_000.0, 0.9),
        "set_cover_3000": (150_000.0, 0.9),
        "set_cover_4000": (200_000.0, 0.9),
        "cap_facility": (1_000.0, 0.7),
        "comb_auction": (20_000.0, 0.7),
        "indep_set": (20_000.0, 0.5),
    },
    "ddpm": {
        "set_cover_2000": (15_000.0, 0.1),
        "set_cover_3000": (22_500.0, 0.1),
        "set_cover_4000": (30_000.0, 0.1),
        "cap_facility": (500_000.0, 0.1),
        "comb_auction": (10_000.0, 0.3),
        "indep_set": (10_000.0, 0.1),
    },
}


@dataclass
class GuidanceConfig:
    variant: str = "ddim"        # "ddim" | "ddpm"
    steps: int = 100             # ddpm always walks all T steps
    s: float = 0.0               # gradient scale; 0 disables guidance
    gamma: float = 0.0           # 0 = constraint only, 1 = objective only
    eta: float = 0.0             # ddim noise rule; 0 is deterministic
    seed: int = 0

    def __post_init__(self):
        if self.variant not in ("ddim", "ddpm"):
            raise ValueError(f"variant must be 'ddim' or 'ddpm', got {self.variant!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.s < 0.0:
            raise ValueError("gradient scale s must be >= 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


def guidance_energy(
    z_t: Tensor, z_i: Tensor, inst: IPInstance, gamma: float, decoder: Decoder
) -> Tensor:
    """(1-gamma) * violation + gamma * objective of the decoded soft bits.

    Works on the canonical minimization form, so lower energy is always
    better.  Accepts batched (B, n, d) or single (n, d) latents; batched
    input yields one scalar per chain.
    """
    canon = canonicalize(inst)
    batched = z_t.dim() == 3
    z_t_b = z_t if batched else z_t[None]
    z_i_b = z_i if z_i.dim() == 3 else z_i[None].expand(z_t_b.shape[0], -1, -1)
    x_soft = decoder(z_t_b, z_i_b)[:, : canon.n]
    A, b, c = dense_tensors(canon, dtype=z_t.dtype)
    c_phi = torch.clamp(x_soft @ A.T - b, min=0.0).sum(dim=1)
    o_phi = x_soft @ c
    energy = (1.0 - gamma) * c_phi + gamma * o_phi
    return energy if batched else energy[0]


def grad_energy(
    z_t: Tensor, z_i: Tensor, inst: IPInstance, gamma: float, decoder: Decoder
) -> Tensor:
    """d(energy)/d(z_t), same shape as z_t, via a backward pass through the decoder."""
    z = z_t.detach().requires_grad_(True)
    energy = guidance_energy(z, z_i, inst, gamma, decoder)
    (grad,) = torch.autograd.grad(energy.sum(), z)
    return grad


def _batched_z_i(z_i: Tensor, batch: int) -> Tensor:
    return z_i[None].expand(batch, -1, -1) if z_i.dim() == 2 else z_i


def _ddpm_chain(
    inst: IPInstance,
    z_i: Tensor,
    model: DiffusionModel,
    cfg: GuidanceConfig,
    z_T: Tensor,
    noise_draw,
) -> Tensor:
    sched = model.schedule
    canon = canonicalize(inst)
    z = z_T
    z_i_b = _batched_z_i(z_i, z.shape[0])
    for t in range(sched.T, 0, -1):
        t_vec = torch.full((z.shape[0],), t, dtype=torch.long)
        with torch.no_grad():
            f = model.denoiser(z, z_i_b, t_vec)
        abar_t = sched.alpha_bar_at(t)
        abar_prev = sched.alpha_bar_at(t - 1)
        alpha_t = float(sched.alpha[t - 1])
        beta_t = float(sched.beta[t - 1])
        mu = (
            np.sqrt(alpha_t) * (1.0 - abar_prev) / (1.0 - abar_t) * z
            + np.sqrt(abar_prev) * beta_t / (1.0 - abar_t) * f
        )
        var = (1.0 - abar_prev) / (1.0 - abar_t) * beta_t
        if cfg.s > 0.0:
            g = grad_energy(z, z_i_b, canon, cfg.gamma, model.decoder)
            mu = mu - cfg.s * var * g
        if t > 1:
            z = mu + np.sqrt(var) * noise_draw(z.shape)
        else:
            z = mu
    return z


def ddim_timesteps(T: int, steps: int) -> list[int]:
    """Descending sub-sequence of length <= steps drawn uniformly from 1..T."""
    ts = np.unique(np.linspace(1, T, num=min(steps, T)).round().astype(int))
    return list(ts[::-1])


def _ddim_chain(
    inst: IPInstance,
    z_i: Tensor,
    model: DiffusionModel,
    cfg: GuidanceConfig,
    z_T: Tensor,
    noise_draw,
) -> Tensor:
    sched = model.schedule
    canon = canonicalize(inst)
    z = z_T
    z_i_b = _batched_z_i(z_i, z.shape[0])
    ts = ddim_timesteps(sched.T, cfg.steps)
    for t, t_prev in zip(ts, list(ts[1:]) + [0]):
        t_vec = torch.full((z.shape[0],), t, dtype=torch.long)
        with torch.no_grad():
            f = model.denoiser(z, z_i_b, t_vec)
        abar_t = sched.alpha_bar_at(t)
        abar_prev = sched.alpha_bar_at(t_prev)
        eps_theta = (z - np.sqrt(abar_t) * f) / np.sqrt(1.0 - abar_t)
        if cfg.s > 0.0:
            g = grad_energy(z, z_i_b, canon, cfg.gamma, model.decoder)
            eps_theta = eps_theta - cfg.s * g
        sigma = (
            cfg.eta
            * np.sqrt((1.0 - abar_prev) / (1.0 - abar_t))
            * np.sqrt(1.0 - abar_t / abar_prev)
        )
        if sigma**2 > 1.0 - abar_prev + 1e-12:
            raise ValueError(f"sigma_t^2={sigma**2:.4g} exceeds 1-abar_(t-1) at t={t}")
        z = np.sqrt(abar_prev) * f + np.sqrt(max(1.0 - abar_prev - sigma**2, 0.0)) * eps_theta
        if sigma > 0.0:
            z = z + sigma * noise_draw(z.shape)
    return z


def _decode_batch(inst: IPInstance, z0: Tensor, z_i: Tensor, model: DiffusionModel) -> list[Solution]:
    z_i_b = _batched_z_i(z_i, z0.shape[0])
    with torch.no_grad():
        soft = model.decoder(z0, z_i_b)[:, : inst.n]
    return [Solution(row) for row in round_solution(soft)]


def _sample_batch(
    inst: IPInstance,
    z_i: Tensor,
    model: DiffusionModel,
    cfg: GuidanceConfig,
    generators: Sequence[torch.Generator],
) -> list[Solution]:
    d = model.config.dim
    z_T = torch.stack([torch.randn((inst.n, d), generator=g) for g in generators])

    def noise_draw(shape):
        return torch.stack(
            [torch.randn(shape[1:], generator=g) for g in generators]
        )

    chain = _ddpm_chain if cfg.variant == "ddpm" else _ddim_chain
    z0 = chain(inst, z_i, model, cfg, z_T, noise_draw)
    return _decode_batch(inst, z0, z_i, model)


def _single_generator(seed: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(seed)
    return g


def sample_ddpm_guided(
    inst: IPInstance, z_i: Tensor, model: DiffusionModel, cfg: GuidanceConfig
) -> Solution:
    """One ancestral chain over all T steps; infeasible outputs are legal."""
    return _sample_batch(inst, z_i, model, cfg, [_single_generator(cfg.seed)])[0]


def sample_ddim_guided(
    inst: IPInstance, z_i: Tensor, model: DiffusionModel, cfg: GuidanceConfig
) -> Solution:
    """One non-Markovian chain over the step sub-sequence; eta=0 is deterministic."""
    return _sample_batch(inst, z_i, model, cfg, [_single_generator(cfg.seed)])[0]


def embed_instance(inst: IPInstance, cisp_model: CISPModel) -> Tensor:
    with torch.no_grad():
        return cisp_model.embed_instances([inst])[0]


def sample_many(
    inst: IPInstance,
    cisp_model: CISPModel,
    model: DiffusionModel,
    cfg: GuidanceConfig,
    count: int,
    oracle_opt: Optional[float] = None,
) -> list[tuple[Solution, EvalReport]]:
    """Independent chains with sub-seeds derived from cfg.seed, evaluated."""
    if count == 0:
        return []
    z_i = embed_instance(inst, cisp_model)
    seeds = np.random.SeedSequence(cfg.seed).spawn(count)
    generators = [_single_generator(int(ss.generate_state(1)[0])) for ss in seeds]
    solutions = _sample_batch(inst, z_i, model, cfg, generators)
    out = []
    for sol in solutions:
        obj = objective_value(inst, sol)
        feas = is_feasible(inst, sol)
        g = gap(obj, oracle_opt) if (oracle_opt is not None and feas) else None
        out.append(
            (
                sol,
                EvalReport(
                    objective=obj,
                    feasible=feas,
                    violation_sum=violation_sum(inst, sol),
                    gap=g,
                    gap_out_of_range=bool(g is not None and g > 1.0),
                ),
            )
        )
    return out
