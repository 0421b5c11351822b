"""Differentiable wireless channel simulation.

The transmitted latent is flattened, consecutive reals are paired into
complex symbols, and the symbol vector is scaled to meet the average power
constraint before noise, fading, or corruption masking are applied.  All
operations are pure functions of (input, config, seed) and keep gradients
flowing to the input; noise and fading realizations are held constant with
respect to autograd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import torch

CHANNEL_TYPES = ("awgn", "rayleigh")

# Zero-forcing equalization clamps |h| below this to bound noise amplification.
FADING_FLOOR = 1e-3


@dataclass
class SymbolVector:
    """Complex channel symbols, shape (batch, k), with nominal mean power."""

    symbols: torch.Tensor
    power: float = 1.0

    @property
    def k(self) -> int:
        return self.symbols.shape[-1]

    def mean_power(self) -> torch.Tensor:
        """Per-sample mean symbol power (1/k)·Σ|x_i|²."""
        return self.symbols.abs().pow(2).mean(dim=-1)


@dataclass
class ChannelRealization:
    """Record of one transmission: SNR, seed, and the drawn fading/mask."""

    snr_db: float
    noise_seed: int
    fading: Optional[torch.Tensor] = None
    mask: Optional[torch.Tensor] = None


@dataclass
class ChannelConfig:
    """Config-file channel block: type, SNR (scalar or sweep list), corruption
    density, seed.  A list-valued snr_db names a sweep; callers must then pass
    the per-transmission SNR explicitly."""

    type: str = "awgn"
    snr_db: float | tuple = 10.0
    mask_density: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.type not in CHANNEL_TYPES:
            raise ValueError(f"unknown channel type {self.type!r}, expected one of {CHANNEL_TYPES}")
        if isinstance(self.snr_db, (list, tuple)):
            self.snr_db = tuple(float(s) for s in self.snr_db)
        if not (0.0 < self.mask_density <= 1.0):
            raise ValueError(f"mask_density must be in (0, 1], got {self.mask_density}")


def _flatten_reals(latent: torch.Tensor) -> torch.Tensor:
    """Flatten to (batch, n) with n even; 1-D inputs become a batch of one."""
    if latent.dim() == 1:
        flat = latent.reshape(1, -1)
    else:
        flat = latent.reshape(latent.shape[0], -1)
    if flat.shape[-1] % 2 != 0:
        raise ValueError(f"latent has {flat.shape[-1]} reals per sample; an even count is required "
                         "to form complex symbols")
    return flat


def to_symbols(latent: torch.Tensor) -> torch.Tensor:
    """Pair consecutive reals of the flattened latent into complex symbols."""
    flat = _flatten_reals(latent)
    pairs = flat.reshape(flat.shape[0], -1, 2)
    return torch.complex(pairs[..., 0], pairs[..., 1])


def from_symbols(symbols: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    """Inverse of :func:`to_symbols`; restores the shape of ``like``."""
    pairs = torch.stack((symbols.real, symbols.imag), dim=-1)
    return pairs.reshape(like.shape)


def power_normalize(latent: torch.Tensor, power: float = 1.0) -> SymbolVector:
    """Scale the symbol vector so each sample satisfies (1/k)·Σ|x_i|² = power.

    The scale is differentiable, so gradients flow back to the latent.
    Raises on an all-zero sample, whose scale is undefined.
    """
    sym = to_symbols(latent)
    energy = sym.abs().pow(2).sum(dim=-1, keepdim=True)
    if torch.any(energy == 0):
        raise ValueError("cannot power-normalize a zero latent (undefined scale)")
    k = sym.shape[-1]
    scale = torch.sqrt(k * power / energy)
    return SymbolVector(sym * scale, power=power)


def _noise_sigma2(power: float, snr_db: float) -> float:
    """Per-symbol complex noise variance for the given SNR in dB."""
    return power * 10.0 ** (-snr_db / 10.0)


def _randn_complex(shape, generator: torch.Generator, dtype: torch.dtype) -> torch.Tensor:
    re = torch.randn(shape, generator=generator, dtype=dtype)
    im = torch.randn(shape, generator=generator, dtype=dtype)
    return torch.complex(re, im)


def awgn(x: SymbolVector, snr_db: float, seed: int = 0) -> SymbolVector:
    """y = x + n with n ~ CN(0, σ²), σ² = P·10^(−snr_db/10), variance split
    evenly across real/imag parts.  snr_db = inf means a noise-free channel.
    The noise is reproducible from the seed and constant w.r.t. autograd."""
    if math.isinf(snr_db):
        return SymbolVector(x.symbols, power=x.power)
    sigma2 = _noise_sigma2(x.power, snr_db)
    g = torch.Generator().manual_seed(seed)
    real_dtype = x.symbols.real.dtype
    noise = _randn_complex(x.symbols.shape, g, real_dtype) * math.sqrt(sigma2 / 2.0)
    return SymbolVector(x.symbols + noise, power=x.power)


def draw_fading(shape, seed: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """i.i.d. Rayleigh flat-fading coefficients h ~ CN(0, 1)."""
    g = torch.Generator().manual_seed(seed)
    return _randn_complex(shape, g, dtype) / math.sqrt(2.0)


def equalize(y: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
    """Perfect-CSI zero-forcing division with |h| clamped below at FADING_FLOOR."""
    habs = h.abs()
    boost = (FADING_FLOOR / habs.clamp_min(1e-30)).clamp_min(1.0)
    h_reg = torch.where(habs > 0, h * boost, torch.full_like(h, FADING_FLOOR))
    return y / h_reg


def _rayleigh_equalized(x: SymbolVector, snr_db: float, seed: int) -> tuple[SymbolVector, torch.Tensor]:
    # Seed offset keeps the fading and noise streams independent for a given seed.
    h = draw_fading(x.symbols.shape, seed + 1, x.symbols.real.dtype)
    noisy = awgn(SymbolVector(h * x.symbols, power=x.power), snr_db, seed)
    return SymbolVector(equalize(noisy.symbols, h), power=x.power), h


def rayleigh(x: SymbolVector, snr_db: float, seed: int = 0) -> SymbolVector:
    """y_i = h_i·x_i + n_i with h_i ~ CN(0,1); returns the equalized x̂ = y/h."""
    out, _ = _rayleigh_equalized(x, snr_db, seed)
    return out


def apply_corruption(x: SymbolVector, mask: torch.Tensor) -> SymbolVector:
    """Elementwise corruption: masked symbols (mask=0) become exactly zero."""
    if mask.shape[-1] != x.k:
        raise ValueError(f"mask length {mask.shape[-1]} does not match symbol count {x.k}")
    return SymbolVector(x.symbols * mask.to(x.symbols.real.dtype), power=x.power)


def make_mask(k: int, density: float, seed: int = 0) -> torch.Tensor:
    """Binary mask of length k with round((1-density)·k) zeros at seeded positions."""
    n_zero = int(round((1.0 - density) * k))
    mask = torch.ones(k)
    if n_zero > 0:
        g = torch.Generator().manual_seed(seed)
        idx = torch.randperm(k, generator=g)[:n_zero]
        mask[idx] = 0.0
    return mask


class Channel:
    """Shape-preserving latent channel used by the experiment harness.

    Normalizes, optionally masks, applies AWGN or Rayleigh fading with
    equalization, and re-packs the symbols into the latent's shape.
    """

    def __init__(self, config: ChannelConfig):
        self.config = config

    def __call__(self, latent: torch.Tensor, snr_db: Optional[float] = None,
                 seed: Optional[int] = None) -> tuple[torch.Tensor, ChannelRealization]:
        cfg = self.config
        snr = cfg.snr_db if snr_db is None else snr_db
        if isinstance(snr, tuple):
            raise ValueError("channel config holds an SNR sweep; pass snr_db explicitly")
        seed = cfg.seed if seed is None else seed
        x = power_normalize(latent)
        mask = None
        if cfg.mask_density < 1.0:
            mask = make_mask(x.k, cfg.mask_density, seed + 2)
            x = apply_corruption(x, mask)
        fading = None
        if cfg.type == "rayleigh":
            out, fading = _rayleigh_equalized(x, snr, seed)
        else:
            out = awgn(x, snr, seed)
        realization = ChannelRealization(snr_db=snr, noise_seed=seed, fading=fading, mask=mask)
        return from_symbols(out.symbols, latent), realization
