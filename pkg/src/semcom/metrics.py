"""Image quality metrics and dataset-level aggregation.

PSNR and SSIM operate on channel-last image arrays with pixel values in
[0, 1] (peak 1.0).  SSIM follows the standard formulation: 11x11 Gaussian
window with sigma 1.5, K1=0.01, K2=0.03, computed per channel over the
valid interior and averaged.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

PSNR_CAP_DB = 100.0

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

CSV_HEADER = ["method", "channel", "snr_db", "psnr", "ssim", "n"]


def _as_array(x) -> np.ndarray:
    if hasattr(x, "detach"):
        x = x.detach().cpu().numpy()
    return np.asarray(x, dtype=np.float64)


def psnr(a, b, peak: float = 1.0) -> float:
    """10·log10(peak²/MSE), capped at 100 dB for identical inputs."""
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(peak * peak / mse), PSNR_CAP_DB)


def psnr_per_image(a, b, peak: float = 1.0) -> np.ndarray:
    """PSNR of each image in a batch."""
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return np.array([psnr(a[i], b[i], peak) for i in range(a.shape[0])])


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords ** 2) / (2.0 * sigma * sigma))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    win = kernel.shape[0]
    view = np.lib.stride_tricks.sliding_window_view(img, (win, win))
    return np.einsum("ijkl,kl->ij", view, kernel)


def _ssim_single(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    h, w = a.shape
    win = SSIM_WINDOW
    if min(h, w) < win:
        # Reduced-window fallback for images smaller than the standard window.
        win = min(h, w)
        if win % 2 == 0:
            win -= 1
        if win < 1:
            raise ValueError("image too small for SSIM")
    kernel = _gaussian_kernel(win, SSIM_SIGMA)
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu_a = _filter_valid(a, kernel)
    mu_b = _filter_valid(b, kernel)
    var_a = _filter_valid(a * a, kernel) - mu_a ** 2
    var_b = _filter_valid(b * b, kernel) - mu_b ** 2
    cov = _filter_valid(a * b, kernel) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, peak: float = 1.0) -> float:
    """Structural similarity in [-1, 1]; 1 iff the inputs are identical.

    Accepts (H, W), (H, W, C), or batched (B, H, W, C) arrays; channels and
    batch entries are averaged.
    """
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        return _ssim_single(a, b, peak)
    if a.ndim == 3:
        return float(np.mean([_ssim_single(a[..., c], b[..., c], peak)
                              for c in range(a.shape[-1])]))
    if a.ndim == 4:
        return float(np.mean([ssim(a[i], b[i], peak) for i in range(a.shape[0])]))
    raise ValueError(f"unsupported image rank {a.ndim}")


def ssim_per_image(a, b, peak: float = 1.0) -> np.ndarray:
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return np.array([ssim(a[i], b[i], peak) for i in range(a.shape[0])])


def make_config_id(method: str, channel: str, snr_db: float) -> str:
    return f"{method}|{channel}|{float(snr_db):g}"


def parse_config_id(config_id: str) -> tuple[str, str, float]:
    method, channel, snr = config_id.split("|")
    return method, channel, float(snr)


@dataclass
class MetricReport:
    """Per-image metric values for one (method, channel, SNR) configuration."""

    metric_name: str
    per_image: np.ndarray
    config_id: str
    mean: float = field(init=False)

    def __post_init__(self):
        self.per_image = np.asarray(self.per_image, dtype=np.float64)
        self.mean = float(np.mean(self.per_image)) if self.per_image.size else float("nan")


def aggregate(reports: list[MetricReport]) -> list[dict]:
    """Merge reports into one row per (method, channel, snr_db).

    Reports sharing a config and metric are merged with a weighted mean.
    Rows are ordered by (method, channel, snr_db) for deterministic output.
    """
    buckets: dict[str, dict[str, list[np.ndarray]]] = {}
    for rep in reports:
        buckets.setdefault(rep.config_id, {}).setdefault(rep.metric_name, []).append(rep.per_image)
    rows = []
    for config_id, metrics in buckets.items():
        method, channel, snr_db = parse_config_id(config_id)
        row = {"method": method, "channel": channel, "snr_db": snr_db}
        counts = set()
        for name in ("psnr", "ssim"):
            if name in metrics:
                values = np.concatenate(metrics[name])
                row[name] = float(np.mean(values))
                counts.add(values.size)
            else:
                row[name] = float("nan")
        if len(counts) > 1:
            raise ValueError(f"inconsistent sample counts for {config_id}: {sorted(counts)}")
        row["n"] = counts.pop() if counts else 0
        rows.append(row)
    rows.sort(key=lambda r: (r["method"], r["channel"], r["snr_db"]))
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    """Serialize aggregated rows with the fixed header and float formatting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([row["method"], row["channel"], f"{row['snr_db']:g}",
                         f"{row['psnr']:.6f}", f"{row['ssim']:.6f}", row["n"]])
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))
