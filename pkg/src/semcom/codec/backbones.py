"""Encoder/decoder backbones: hierarchical window-transformer and CNN.

The transformer encoder runs two stages (patch embed -> windowed attention
-> 2x2 patch merge -> windowed attention) and projects to the latent
channel dimension; the decoder mirrors it exactly.  The CNN pair is the
convolutional joint source-channel baseline with the same latent budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .swin import (SnrEmbedding, SwinBlock, assemble_patches, merge_patches,
                   partition_patches, split_patches)


@dataclass
class SwinCodecConfig:
    patch_size: int = 4
    embed_dim: int = 48
    num_heads: int = 4
    window_sizes: tuple[int, int] = (4, 2)
    depths: tuple[int, int] = (2, 2)
    latent_channels: int = 32
    mlp_ratio: float = 2.0

    @property
    def stage_dims(self) -> tuple[int, int]:
        return (self.embed_dim, 2 * self.embed_dim)


def _make_stage(dim: int, heads: int, window: int, depth: int, mlp_ratio: float) -> nn.ModuleList:
    blocks = []
    for i in range(depth):
        shift = 0 if i % 2 == 0 else window // 2
        blocks.append(SwinBlock(dim, heads, window, shift, mlp_ratio))
    return nn.ModuleList(blocks)


class SwinEncoder(nn.Module):
    """Images (B, H, W, 3) -> latent (B, H/8, W/8, C)."""

    def __init__(self, cfg: SwinCodecConfig):
        super().__init__()
        self.cfg = cfg
        d1, d2 = cfg.stage_dims
        patch_dim = cfg.patch_size * cfg.patch_size * 3
        self.embed = nn.Linear(patch_dim, d1)
        self.snr_embed1 = SnrEmbedding(d1)
        self.stage1 = _make_stage(d1, cfg.num_heads, cfg.window_sizes[0], cfg.depths[0], cfg.mlp_ratio)
        self.merge_proj = nn.Linear(4 * d1, d2)
        self.snr_embed2 = SnrEmbedding(d2)
        self.stage2 = _make_stage(d2, cfg.num_heads, cfg.window_sizes[1], cfg.depths[1], cfg.mlp_ratio)
        self.head = nn.Linear(d2, cfg.latent_channels)
        self.act = nn.ReLU()

    def forward(self, images: torch.Tensor, snr_db: float) -> torch.Tensor:
        x = partition_patches(images, self.cfg.patch_size)
        x = self.act(self.embed(x))
        emb1 = self.snr_embed1(snr_db)
        for block in self.stage1:
            x = block(x, emb1)
        x = self.act(self.merge_proj(merge_patches(x)))
        emb2 = self.snr_embed2(snr_db)
        for block in self.stage2:
            x = block(x, emb2)
        return self.head(x)


class SwinDecoder(nn.Module):
    """Latent (B, H/8, W/8, C) -> images (B, H, W, 3) in [0, 1]; mirror of the encoder."""

    def __init__(self, cfg: SwinCodecConfig):
        super().__init__()
        self.cfg = cfg
        d1, d2 = cfg.stage_dims
        self.in_proj = nn.Linear(cfg.latent_channels, d2)
        self.snr_embed2 = SnrEmbedding(d2)
        self.stage2 = _make_stage(d2, cfg.num_heads, cfg.window_sizes[1], cfg.depths[1], cfg.mlp_ratio)
        self.split_proj = nn.Linear(d2, 4 * d1)
        self.snr_embed1 = SnrEmbedding(d1)
        self.stage1 = _make_stage(d1, cfg.num_heads, cfg.window_sizes[0], cfg.depths[0], cfg.mlp_ratio)
        patch_dim = cfg.patch_size * cfg.patch_size * 3
        self.unembed = nn.Linear(d1, patch_dim)
        self.act = nn.ReLU()

    def forward(self, latent: torch.Tensor, snr_db: float) -> torch.Tensor:
        x = self.act(self.in_proj(latent))
        emb2 = self.snr_embed2(snr_db)
        for block in self.stage2:
            x = block(x, emb2)
        x = self.act(split_patches(self.split_proj(x)))
        emb1 = self.snr_embed1(snr_db)
        for block in self.stage1:
            x = block(x, emb1)
        x = self.unembed(x)
        images = assemble_patches(x, self.cfg.patch_size)
        return torch.sigmoid(images)


class CnnEncoder(nn.Module):
    """Five-layer strided conv encoder (the convolutional baseline backbone)."""

    def __init__(self, latent_channels: int = 32, width: int = 32):
        super().__init__()
        w = width
        self.net = nn.Sequential(
            nn.Conv2d(3, w // 2, 5, stride=2, padding=2), nn.PReLU(),
            nn.Conv2d(w // 2, w, 5, stride=2, padding=2), nn.PReLU(),
            nn.Conv2d(w, w, 5, stride=2, padding=2), nn.PReLU(),
            nn.Conv2d(w, w, 5, stride=1, padding=2), nn.PReLU(),
            nn.Conv2d(w, latent_channels, 5, stride=1, padding=2), nn.PReLU(),
        )

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        x = images.permute(0, 3, 1, 2)
        return self.net(x).permute(0, 2, 3, 1)


class CnnDecoder(nn.Module):
    """Five-layer transposed-conv decoder mirroring :class:`CnnEncoder`."""

    def __init__(self, latent_channels: int = 32, width: int = 32):
        super().__init__()
        w = width
        self.net = nn.Sequential(
            nn.ConvTranspose2d(latent_channels, w, 5, stride=1, padding=2), nn.PReLU(),
            nn.ConvTranspose2d(w, w, 5, stride=1, padding=2), nn.PReLU(),
            nn.ConvTranspose2d(w, w, 5, stride=2, padding=2, output_padding=1), nn.PReLU(),
            nn.ConvTranspose2d(w, w // 2, 5, stride=2, padding=2, output_padding=1), nn.PReLU(),
            nn.ConvTranspose2d(w // 2, 3, 5, stride=2, padding=2, output_padding=1), nn.Sigmoid(),
        )

    def forward(self, latent: torch.Tensor) -> torch.Tensor:
        x = latent.permute(0, 3, 1, 2)
        return self.net(x).permute(0, 2, 3, 1)
