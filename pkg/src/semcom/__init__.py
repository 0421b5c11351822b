"""semcom: semantic image communication over simulated noisy channels.

A transformer joint source-channel codec compresses images into latents
transmitted through AWGN or Rayleigh channels; a compact diffusion-driven
refiner restores detail at the receiver.  Classical JPEG+LDPC+QAM and
convolutional baselines, quality metrics, and an experiment harness round
out the library.
"""

from . import baseline, channel, codec, harness, metrics, refiner
from .channel import (Channel, ChannelConfig, ChannelRealization, SymbolVector,
                      apply_corruption, awgn, power_normalize, rayleigh)
from .codec import SemanticCodec, SwinCodecConfig, codec_loss
from .metrics import MetricReport, aggregate, psnr, ssim
from .refiner import (NoiseSchedule, RefinerConfig, SemanticRefiner, denoise,
                      forward_diffuse, loss_joint, loss_l1, loss_l2,
                      make_schedule, reverse_step)

__version__ = "0.1.0"

__all__ = [
    "Channel", "ChannelConfig", "ChannelRealization", "MetricReport",
    "NoiseSchedule", "RefinerConfig", "SemanticCodec", "SemanticRefiner",
    "SwinCodecConfig", "SymbolVector", "aggregate", "apply_corruption", "awgn",
    "baseline", "channel", "codec", "codec_loss", "denoise", "forward_diffuse",
    "harness", "loss_joint", "loss_l1", "loss_l2", "make_schedule", "metrics",
    "power_normalize", "psnr", "rayleigh", "refiner", "reverse_step", "ssim",
]
