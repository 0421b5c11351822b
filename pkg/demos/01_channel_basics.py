"""Walk through the simulated wireless channel.

The transmitted latent is flattened into complex symbols, scaled to unit
average power, and then corrupted: additive white Gaussian noise for the
AWGN channel, or Rayleigh flat fading followed by zero-forcing equalization.
We verify the power constraint, measure realized SNR against the target,
and look at how equalization amplifies noise when the fading is deep.
"""

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import torch

from semcom.channel import awgn, draw_fading, make_mask, apply_corruption, power_normalize, rayleigh

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# --- power normalization ----------------------------------------------------
latent = torch.randn(1, 4, 4, 32, generator=torch.Generator().manual_seed(0))
x = power_normalize(latent)
print(f"symbols: {x.k}, mean power: {x.mean_power().item():.9f}")

# Scaling the latent changes nothing after normalization.
x10 = power_normalize(latent * 10)
print("scale invariance:", torch.allclose(x.symbols, x10.symbols, atol=1e-6))

# --- realized SNR across the test grid ---------------------------------------
n = 100_000
big = power_normalize(torch.randn(2 * n, generator=torch.Generator().manual_seed(1)))
print("\ntarget vs realized SNR (AWGN, 100k symbols):")
for snr_db in (0, 3, 6, 9, 12, 15):
    y = awgn(big, snr_db, seed=snr_db)
    noise = y.symbols - big.symbols
    realized = 10 * math.log10(big.symbols.abs().pow(2).mean().item()
                               / noise.abs().pow(2).mean().item())
    print(f"  {snr_db:2d} dB -> {realized:5.2f} dB")

# --- Rayleigh fading and equalization ----------------------------------------
h = draw_fading((n,), seed=2)
print(f"\nE|h|^2 = {h.abs().pow(2).mean().item():.4f} (should be ~1)")

mse_awgn = (awgn(big, 10.0, seed=3).symbols - big.symbols).abs().pow(2).mean().item()
mse_ray = (rayleigh(big, 10.0, seed=3).symbols - big.symbols).abs().pow(2).mean().item()
print(f"post-equalization MSE at 10 dB: awgn {mse_awgn:.4f}, rayleigh {mse_ray:.4f}")
print("(deep fades amplify noise once divided out, so rayleigh is worse)")

# --- corruption masking -------------------------------------------------------
mask = make_mask(x.k, density=0.9, seed=4)
masked = apply_corruption(x, mask)
print(f"\nmask density 0.9: {(mask == 0).sum().item()} of {x.k} symbols zeroed")

# --- picture: noise clouds at two SNRs ---------------------------------------
fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharex=True, sharey=True)
for ax, snr_db in zip(axes, (5, 15)):
    y = awgn(power_normalize(torch.randn(2048, generator=torch.Generator().manual_seed(5))),
             snr_db, seed=6)
    ax.scatter(y.symbols.real, y.symbols.imag, s=4, alpha=0.4)
    ax.set_title(f"received symbols at {snr_db} dB")
    ax.set_aspect("equal")
fig.tight_layout()
fig.savefig(OUT / "channel_noise_clouds.png", dpi=110)
print(f"\nwrote {OUT / 'channel_noise_clouds.png'}")
