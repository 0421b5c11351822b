"""Networks of the semantic fine-tuning module.

PriorNetwork is the slim extractor that maps (reference ++ decoded) image
stacks to a compact prior vector.  NoisePredictor estimates the diffusion
noise on that vector.  ReconstructionNetwork is a U-shaped stack of dynamic
transformer blocks (channel-wise transposed attention + gated feed-forward),
modulated per block by the prior vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass
class RefinerConfig:
    levels: int = 4
    heads: tuple[int, ...] = (1, 2, 4, 8)
    blocks: tuple[int, ...] = (3, 5, 6, 6)
    c_prime: int = 96
    base_dim: int = 48
    patch: int = 32
    batch: int = 16
    lr: float = 2e-4
    epochs: int = 30
    timesteps: int = 4
    beta_start: float = 0.10
    beta_end: float = 0.99

    def __post_init__(self):
        if len(self.heads) != self.levels or len(self.blocks) != self.levels:
            raise ValueError("heads and blocks lists must have one entry per level")

    @property
    def prior_dim(self) -> int:
        return 4 * self.c_prime


class PriorNetwork(nn.Module):
    """Strided conv pyramid to 1x1 spatial, then a linear head to the prior dim."""

    def __init__(self, in_channels: int, c_prime: int = 96, spatial: int = 32):
        super().__init__()
        depth = max(1, int(math.log2(spatial)))
        layers = []
        ch = in_channels
        for _ in range(depth):
            layers += [nn.Conv2d(ch, c_prime, 3, stride=2, padding=1), nn.ReLU()]
            ch = c_prime
        self.pyramid = nn.Sequential(*layers)
        self.head = nn.Linear(c_prime, 4 * c_prime)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        x = images.permute(0, 3, 1, 2)
        x = self.pyramid(x)
        x = F.adaptive_avg_pool2d(x, 1).flatten(1)
        return self.head(x)


def timestep_embedding(t: int, dim: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Sinusoidal embedding of a scalar timestep."""
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=dtype) / max(half - 1, 1))
    angle = t * freqs
    return torch.cat([angle.sin(), angle.cos()])


class NoisePredictor(nn.Module):
    """MLP noise estimator over (z_t ++ condition ++ time embedding).

    The output is parameterized as a correction to the pure-noise hypothesis
    z_t / sqrt(1 - abar_t), which keeps the reverse chain contractive under an
    untrained predictor instead of amplifying by prod(1/sqrt(alpha_t)).
    """

    def __init__(self, prior_dim: int, cond_dim: int, time_dim: int = 64, num_layers: int = 4):
        super().__init__()
        self.time_dim = time_dim
        hidden = prior_dim
        dims = [prior_dim + cond_dim + time_dim] + [hidden] * (num_layers - 1) + [prior_dim]
        layers = []
        for i in range(num_layers):
            layers.append(nn.Linear(dims[i], dims[i + 1]))
            if i < num_layers - 1:
                layers.append(nn.SiLU())
        self.net = nn.Sequential(*layers)

    def forward(self, z_t: torch.Tensor, t: int, condition: torch.Tensor,
                anchor_scale: float = 0.0) -> torch.Tensor:
        temb = timestep_embedding(t, self.time_dim, z_t.dtype).to(z_t.device)
        temb = temb.expand(z_t.shape[0], -1)
        correction = self.net(torch.cat([z_t, condition, temb], dim=-1))
        return anchor_scale * z_t + correction


class DynamicModulation(nn.Module):
    """Per-channel scale/shift computed from the prior vector."""

    def __init__(self, z_dim: int, dim: int):
        super().__init__()
        self.proj = nn.Linear(z_dim, 2 * dim)

    def forward(self, x: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        scale, shift = self.proj(z).chunk(2, dim=-1)
        return x * (1 + scale[:, :, None, None]) + shift[:, :, None, None]


class Dmta(nn.Module):
    """Dynamic multi-head transposed attention: attention across channels.

    The attention matrix per head is (dim/heads, dim/heads) regardless of the
    spatial resolution; the prior vector modulates the normalized features.
    """

    def __init__(self, dim: int, num_heads: int, z_dim: int):
        super().__init__()
        if dim % num_heads:
            raise ValueError(f"dim {dim} not divisible by {num_heads} heads")
        self.num_heads = num_heads
        self.norm = nn.GroupNorm(1, dim)
        self.modulate = DynamicModulation(z_dim, dim)
        self.temperature = nn.Parameter(torch.ones(num_heads, 1, 1))
        self.qkv = nn.Conv2d(dim, dim * 3, 1)
        self.qkv_dw = nn.Conv2d(dim * 3, dim * 3, 3, padding=1, groups=dim * 3)
        self.proj = nn.Conv2d(dim, dim, 1)

    def forward(self, x: torch.Tensor, z: torch.Tensor, return_attn: bool = False):
        b, c, h, w = x.shape
        y = self.modulate(self.norm(x), z)
        q, k, v = self.qkv_dw(self.qkv(y)).chunk(3, dim=1)
        hd = c // self.num_heads
        q = F.normalize(q.reshape(b, self.num_heads, hd, h * w), dim=-1)
        k = F.normalize(k.reshape(b, self.num_heads, hd, h * w), dim=-1)
        v = v.reshape(b, self.num_heads, hd, h * w)
        attn = (q @ k.transpose(-2, -1)) * self.temperature
        attn = attn.softmax(dim=-1)
        out = (attn @ v).reshape(b, c, h, w)
        out = x + self.proj(out)
        if return_attn:
            return out, attn
        return out


class Dgfn(nn.Module):
    """Dynamic gated feed-forward network with depthwise spatial mixing."""

    def __init__(self, dim: int, z_dim: int, expansion: float = 2.0):
        super().__init__()
        hidden = int(dim * expansion)
        self.norm = nn.GroupNorm(1, dim)
        self.modulate = DynamicModulation(z_dim, dim)
        self.expand = nn.Conv2d(dim, hidden * 2, 1)
        self.dw = nn.Conv2d(hidden * 2, hidden * 2, 3, padding=1, groups=hidden * 2)
        self.project = nn.Conv2d(hidden, dim, 1)

    def forward(self, x: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        y = self.modulate(self.norm(x), z)
        gate, value = self.dw(self.expand(y)).chunk(2, dim=1)
        return x + self.project(F.gelu(gate) * value)


class DynamicTransformerBlock(nn.Module):
    """One reconstruction block: channel attention then gated feed-forward."""

    def __init__(self, dim: int, num_heads: int, z_dim: int):
        super().__init__()
        self.num_heads = num_heads
        self.attn = Dmta(dim, num_heads, z_dim)
        self.ffn = Dgfn(dim, z_dim)

    def forward(self, x: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return self.ffn(self.attn(x, z), z)


def _level(dim: int, heads: int, count: int, z_dim: int) -> nn.ModuleList:
    return nn.ModuleList(DynamicTransformerBlock(dim, heads, z_dim) for _ in range(count))


class ReconstructionNetwork(nn.Module):
    """U-shaped reconstruction network refining a decoded image with a prior.

    Encoder levels 1..3 and the level-4 bottleneck hold cfg.blocks[l] dynamic
    transformer blocks with cfg.heads[l] heads; the decoder mirrors levels
    3..1.  The output is a residual on the input, clamped to [0, 1].
    """

    def __init__(self, cfg: RefinerConfig):
        super().__init__()
        self.cfg = cfg
        z_dim = cfg.prior_dim
        dims = [cfg.base_dim * (2 ** i) for i in range(cfg.levels)]
        self.dims = dims
        self.patch_in = nn.Conv2d(3, dims[0], 3, padding=1)
        self.encoder_levels = nn.ModuleList(
            _level(dims[i], cfg.heads[i], cfg.blocks[i], z_dim) for i in range(cfg.levels - 1))
        self.downs = nn.ModuleList(
            nn.Conv2d(dims[i], dims[i + 1], 3, stride=2, padding=1) for i in range(cfg.levels - 1))
        self.latent_level = _level(dims[-1], cfg.heads[-1], cfg.blocks[-1], z_dim)
        self.ups = nn.ModuleList(
            nn.ConvTranspose2d(dims[i + 1], dims[i], 2, stride=2) for i in range(cfg.levels - 1))
        self.skip_fuse = nn.ModuleList(
            nn.Conv2d(2 * dims[i], dims[i], 1) for i in range(cfg.levels - 1))
        self.decoder_levels = nn.ModuleList(
            _level(dims[i], cfg.heads[i], cfg.blocks[i], z_dim) for i in range(cfg.levels - 1))
        self.out = nn.Conv2d(dims[0], 3, 3, padding=1)

    def forward(self, decoded: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        x = self.patch_in(decoded.permute(0, 3, 1, 2))
        skips = []
        for level, down in zip(self.encoder_levels, self.downs):
            for block in level:
                x = block(x, z)
            skips.append(x)
            x = down(x)
        for block in self.latent_level:
            x = block(x, z)
        for i in reversed(range(self.cfg.levels - 1)):
            x = self.ups[i](x)
            x = self.skip_fuse[i](torch.cat([x, skips[i]], dim=1))
            for block in self.decoder_levels[i]:
                x = block(x, z)
        delta = self.out(x).permute(0, 2, 3, 1)
        return torch.clamp(decoded + delta, 0.0, 1.0)
