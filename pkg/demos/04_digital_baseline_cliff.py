"""The cliff effect of the separation-based JPEG + LDPC + 4-QAM baseline.

Digital transmission is all-or-nothing: above the channel code's threshold
the image arrives exactly as JPEG encoded it (quality-limited ceiling);
below it, frames fail parity and nothing usable arrives (mid-gray floor).
The PSNR-vs-SNR curve is flat on both sides of a sharp transition, unlike
the graceful degradation of the learned codec.
"""

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from semcom.baseline import BaselineConfig, baseline_transmit, jpeg_roundtrip
from semcom.harness.data import synthetic_images
from semcom.metrics import psnr_per_image

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

images = synthetic_images(6, seed=12)
config = BaselineConfig()

ceiling = np.mean([psnr_per_image(images[i:i + 1],
                                  jpeg_roundtrip(images[i], config.jpeg_quality)[None])
                   for i in range(len(images))])
print(f"JPEG quality {config.jpeg_quality} ceiling: {ceiling:.2f} dB")

snrs = [0, 1, 2, 3, 4, 6, 9, 12, 15]
curve = []
for snr in snrs:
    out, ok = baseline_transmit(images, float(snr), "awgn", config, seed=snr)
    mean_psnr = float(np.mean(psnr_per_image(images, out.numpy())))
    curve.append(mean_psnr)
    print(f"  {snr:2d} dB: {ok.mean():.0%} frames ok, PSNR {mean_psnr:5.2f} dB")

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(snrs, curve, marker="o")
ax.axhline(ceiling, ls="--", c="gray", label="JPEG ceiling")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("PSNR (dB)")
ax.set_title("JPEG+LDPC+QAM over AWGN: the cliff")
ax.legend()
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(OUT / "baseline_cliff.png", dpi=110)
print(f"\nwrote {OUT / 'baseline_cliff.png'}")
