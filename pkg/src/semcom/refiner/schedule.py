"""Noise schedule and the forward/reverse diffusion steps for the prior vector.

The schedule is a strictly increasing linear variance table beta_1..beta_T
with alpha_t = 1 - beta_t and alpha_bar_t the running product.  The forward
step uses the closed-form marginal; the reverse step is the deterministic
mean update driven by a predicted noise vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import torch


@dataclass(frozen=True)
class NoiseSchedule:
    """Variance table for a T-step diffusion chain (float64 coefficients)."""

    beta: torch.Tensor
    alpha: torch.Tensor
    alpha_bar: torch.Tensor

    @property
    def T(self) -> int:
        return self.beta.shape[0]

    def coeffs(self, t: int) -> tuple[float, float, float]:
        """(beta_t, alpha_t, alpha_bar_t) for 1-based step t."""
        self._check_t(t)
        i = t - 1
        return float(self.beta[i]), float(self.alpha[i]), float(self.alpha_bar[i])

    def _check_t(self, t: int) -> None:
        if not 1 <= t <= self.T:
            raise ValueError(f"timestep {t} outside [1, {self.T}]")


def make_schedule(T: int, beta_start: float = 0.10, beta_end: float = 0.99) -> NoiseSchedule:
    """Linear variance table from beta_start to beta_end over T steps.

    T = 1 degenerates to the single step [beta_end].
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start < beta_end < 1.0):
        raise ValueError(f"need 0 < beta_start < beta_end < 1, got ({beta_start}, {beta_end})")
    if T == 1:
        beta = torch.tensor([beta_end], dtype=torch.float64)
    else:
        beta = torch.linspace(beta_start, beta_end, T, dtype=torch.float64)
    alpha = 1.0 - beta
    alpha_bar = torch.cumprod(alpha, dim=0)
    return NoiseSchedule(beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def forward_diffuse(z0: torch.Tensor, t: int, noise: torch.Tensor,
                    sched: NoiseSchedule) -> torch.Tensor:
    """Closed-form marginal z_t = sqrt(abar_t)·z0 + sqrt(1 - abar_t)·noise."""
    _, _, abar = sched.coeffs(t)
    if noise.shape != z0.shape:
        raise ValueError(f"noise shape {tuple(noise.shape)} != z0 shape {tuple(z0.shape)}")
    return (abar ** 0.5) * z0 + ((1.0 - abar) ** 0.5) * noise


def diffuse_stepwise(z0: torch.Tensor, noises: list[torch.Tensor],
                     sched: NoiseSchedule) -> torch.Tensor:
    """Iterate z_t = sqrt(1-beta_t)·z_{t-1} + sqrt(beta_t)·eps_t for t = 1..T."""
    if len(noises) != sched.T:
        raise ValueError(f"need {sched.T} noise draws, got {len(noises)}")
    z = z0
    for t in range(1, sched.T + 1):
        beta, _, _ = sched.coeffs(t)
        z = ((1.0 - beta) ** 0.5) * z + (beta ** 0.5) * noises[t - 1]
    return z


def reverse_step(z_t: torch.Tensor, t: int, predicted_noise: torch.Tensor,
                 sched: NoiseSchedule) -> torch.Tensor:
    """Deterministic reverse update
    z_{t-1} = (z_t - ((1 - alpha_t)/sqrt(1 - abar_t))·eps_hat) / sqrt(alpha_t)."""
    _, alpha, abar = sched.coeffs(t)
    coef = (1.0 - alpha) / ((1.0 - abar) ** 0.5)
    return (z_t - coef * predicted_noise) / (alpha ** 0.5)


def denoise(z_T: torch.Tensor, condition: torch.Tensor, sched: NoiseSchedule,
            eps_model: Callable[[torch.Tensor, int, torch.Tensor], torch.Tensor]) -> torch.Tensor:
    """Run the reverse chain t = T..1; eps_model(z_t, t, condition) predicts the noise."""
    z = z_T
    for t in range(sched.T, 0, -1):
        z = reverse_step(z, t, eps_model(z, t, condition), sched)
    return z
