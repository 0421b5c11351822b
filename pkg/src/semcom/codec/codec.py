"""Joint source-channel codec facade over the transformer and CNN backbones."""

from __future__ import annotations

import torch
import torch.nn as nn

from .backbones import CnnDecoder, CnnEncoder, SwinCodecConfig, SwinDecoder, SwinEncoder

BACKBONES = ("swin", "cnn")

DOWNSAMPLE_FACTOR = 8


def validate_image_batch(images: torch.Tensor) -> None:
    """Check the image-batch contract: (B, H, W, 3), values in [0, 1], dims % 8 == 0."""
    if images.dim() != 4 or images.shape[-1] != 3:
        raise ValueError(f"expected images of shape (B, H, W, 3), got {tuple(images.shape)}")
    _, h, w, _ = images.shape
    if h % DOWNSAMPLE_FACTOR or w % DOWNSAMPLE_FACTOR:
        raise ValueError(f"image dims {h}x{w} must be divisible by {DOWNSAMPLE_FACTOR}")
    if images.min() < 0 or images.max() > 1:
        raise ValueError("pixel values must lie in [0, 1]")


def codec_loss(original: torch.Tensor, reconstructed: torch.Tensor) -> torch.Tensor:
    """Mean squared error over all pixels."""
    if original.shape != reconstructed.shape:
        raise ValueError(f"shape mismatch: {tuple(original.shape)} vs {tuple(reconstructed.shape)}")
    return torch.mean((original - reconstructed) ** 2)


class SemanticCodec(nn.Module):
    """Encoder/decoder pair mapping images to channel-ready latents and back.

    backbone="swin" is the windowed-transformer codec conditioned on the
    target SNR; backbone="cnn" is the convolutional baseline, which ignores
    the SNR argument.
    """

    def __init__(self, backbone: str = "swin", latent_channels: int = 32,
                 swin_config: SwinCodecConfig | None = None, cnn_width: int = 32):
        super().__init__()
        if backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {backbone!r}, expected one of {BACKBONES}")
        self.backbone = backbone
        self.latent_channels = latent_channels
        if backbone == "swin":
            cfg = swin_config or SwinCodecConfig(latent_channels=latent_channels)
            if cfg.latent_channels != latent_channels:
                raise ValueError("swin_config.latent_channels disagrees with latent_channels")
            self.config = cfg
            self.encoder = SwinEncoder(cfg)
            self.decoder = SwinDecoder(cfg)
        else:
            self.config = None
            self.encoder = CnnEncoder(latent_channels, cnn_width)
            self.decoder = CnnDecoder(latent_channels, cnn_width)

    def encode(self, images: torch.Tensor, snr_db: float) -> torch.Tensor:
        validate_image_batch(images)
        if self.backbone == "swin":
            latent = self.encoder(images, snr_db)
        else:
            latent = self.encoder(images)
        if not torch.isfinite(latent).all():
            raise RuntimeError("encoder produced non-finite latent values")
        return latent

    def decode(self, latent: torch.Tensor, snr_db: float) -> torch.Tensor:
        if latent.dim() != 4 or latent.shape[-1] != self.latent_channels:
            raise ValueError(f"expected latent of shape (B, H/8, W/8, {self.latent_channels}), "
                             f"got {tuple(latent.shape)}")
        if self.backbone == "swin":
            return self.decoder(latent, snr_db)
        return self.decoder(latent)

    def forward(self, images: torch.Tensor, snr_db: float) -> torch.Tensor:
        return self.decode(self.encode(images, snr_db), snr_db)
