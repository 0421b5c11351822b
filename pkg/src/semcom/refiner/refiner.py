"""Semantic fine-tuning module: prior extraction, diffusion, reconstruction."""

from __future__ import annotations

from typing import Optional

import torch
import torch.nn as nn

from .networks import NoisePredictor, PriorNetwork, ReconstructionNetwork, RefinerConfig
from .schedule import NoiseSchedule, denoise, forward_diffuse, make_schedule


def loss_l1(target: torch.Tensor, refined: torch.Tensor) -> torch.Tensor:
    """Mean absolute pixel error."""
    if target.shape != refined.shape:
        raise ValueError(f"shape mismatch: {tuple(target.shape)} vs {tuple(refined.shape)}")
    return torch.mean(torch.abs(target - refined))


def loss_l2(z_hat: torch.Tensor, z0: torch.Tensor) -> torch.Tensor:
    """Mean absolute error over the prior-vector entries."""
    if z_hat.shape != z0.shape:
        raise ValueError(f"shape mismatch: {tuple(z_hat.shape)} vs {tuple(z0.shape)}")
    return torch.mean(torch.abs(z_hat - z0))


def loss_joint(l1, l2):
    """Joint objective: sum of the image and prior losses."""
    return l1 + l2


class SemanticRefiner(nn.Module):
    """Receiver-side refinement: a compact diffusion chain over a prior vector
    conditions a U-shaped reconstruction network that sharpens decoded images.

    Training uses the reference+decoded image stack to extract the target
    prior; inference extracts conditioning features from the decoded image
    alone and samples the chain from Gaussian noise.
    """

    def __init__(self, config: RefinerConfig | None = None):
        super().__init__()
        cfg = config or RefinerConfig()
        self.config = cfg
        self.prior_net = PriorNetwork(6, cfg.c_prime, cfg.patch)
        self.cond_net = PriorNetwork(3, cfg.c_prime, cfg.patch)
        self.eps_model = NoisePredictor(cfg.prior_dim, cfg.prior_dim)
        self.recon = ReconstructionNetwork(cfg)
        self.schedule: NoiseSchedule = make_schedule(cfg.timesteps, cfg.beta_start, cfg.beta_end)

    def _anchor_scale(self, t: int) -> float:
        _, _, abar = self.schedule.coeffs(t)
        return (1.0 - abar) ** -0.5

    def extract_prior(self, decoded: torch.Tensor, reference: Optional[torch.Tensor] = None,
                      training: Optional[bool] = None) -> torch.Tensor:
        """Prior vector of dim 4C'.

        With a reference image the 6-channel training path runs; without one
        the decoded-image conditioning path runs.  Passing training=True with
        no reference is an error.
        """
        if training is None:
            training = reference is not None
        if training:
            if reference is None:
                raise ValueError("training-mode prior extraction requires the reference images")
            if reference.shape != decoded.shape:
                raise ValueError(f"shape mismatch: {tuple(reference.shape)} vs {tuple(decoded.shape)}")
            return self.prior_net(torch.cat([reference, decoded], dim=-1))
        return self.cond_net(decoded)

    def predict_noise(self, z_t: torch.Tensor, t: int, condition: torch.Tensor) -> torch.Tensor:
        return self.eps_model(z_t, t, condition, anchor_scale=self._anchor_scale(t))

    def denoise_prior(self, z_T: torch.Tensor, condition: torch.Tensor) -> torch.Tensor:
        """Run the reverse chain from z_T down to the prior estimate."""
        return denoise(z_T, condition, self.schedule, self.predict_noise)

    def sample_prior(self, decoded: torch.Tensor,
                     generator: Optional[torch.Generator] = None) -> torch.Tensor:
        """Inference path: Gaussian z_T denoised under decoded-image conditioning."""
        cond = self.cond_net(decoded)
        z_T = torch.randn(decoded.shape[0], self.config.prior_dim,
                          generator=generator, dtype=decoded.dtype)
        return self.denoise_prior(z_T, cond)

    def diffuse_prior(self, z0: torch.Tensor, noise: torch.Tensor) -> torch.Tensor:
        """Forward-diffuse the prior to the terminal step of the chain."""
        return forward_diffuse(z0, self.schedule.T, noise, self.schedule)

    def reconstruct(self, decoded: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """Refine the decoded image using z as dynamic modulation parameters."""
        if z.dim() != 2 or z.shape[-1] != self.config.prior_dim:
            raise ValueError(f"expected prior of shape (B, {self.config.prior_dim}), "
                             f"got {tuple(z.shape)}")
        return self.recon(decoded, z)

    def refine(self, decoded: torch.Tensor, seed: int = 0) -> torch.Tensor:
        """Full inference: sample the prior and reconstruct."""
        g = torch.Generator().manual_seed(seed)
        z = self.sample_prior(decoded, generator=g)
        return self.reconstruct(decoded, z)
