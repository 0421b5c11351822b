"""Evaluation over the method x channel x SNR grid, with plots and image grids."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import torch

from ..baseline import baseline_transmit
from ..channel import Channel, ChannelConfig
from ..checkpoint import load_checkpoint
from ..metrics import (MetricReport, aggregate, make_config_id, psnr_per_image,
                       ssim_per_image, write_csv)
from .config import ExperimentConfig
from .data import load_dataset
from .manifest import RunManifest
from .training import codec_from_checkpoint, derived_seed, refiner_from_checkpoint

REFERENCE_METHOD = "deepjscc-cnn"


@dataclass
class EvalResult:
    rows: list[dict]
    csv_path: Path
    plot_paths: list[Path] = field(default_factory=list)
    grid_paths: list[Path] = field(default_factory=list)
    manifest_path: Optional[Path] = None
    skipped: list[str] = field(default_factory=list)


class _MethodRunner:
    """Builds models once and transmits an image batch per (channel, SNR) cell."""

    def __init__(self, cfg: ExperimentConfig, checkpoints: dict[str, str]):
        self.cfg = cfg
        self.codecs: dict[str, object] = {}
        self.refiner = None
        if "codec" in checkpoints:
            self.codecs["swin"] = codec_from_checkpoint(
                load_checkpoint(checkpoints["codec"], expected_kind="codec"))
        if "cnn_codec" in checkpoints:
            self.codecs["cnn"] = codec_from_checkpoint(
                load_checkpoint(checkpoints["cnn_codec"], expected_kind="codec"))
        if "refiner" in checkpoints:
            self.refiner = refiner_from_checkpoint(
                load_checkpoint(checkpoints["refiner"], expected_kind="refiner"))

    def available(self, method: str) -> bool:
        if method == "jpeg-ldpc-qam":
            return True
        if method == "deepjscc-cnn":
            return "cnn" in self.codecs
        if method == "nsf":
            return "swin" in self.codecs
        if method == "sc-cdm":
            return "swin" in self.codecs and self.refiner is not None
        raise ValueError(f"unknown method {method!r}")

    def transmit(self, method: str, images: torch.Tensor, channel_type: str,
                 snr_db: float, seed: int) -> torch.Tensor:
        if method == "jpeg-ldpc-qam":
            out, _ = baseline_transmit(images, snr_db, channel_type,
                                       self.cfg.baseline.to_baseline_config(), seed=seed)
            return out
        backbone = "cnn" if method == "deepjscc-cnn" else "swin"
        codec = self.codecs[backbone]
        channel = Channel(ChannelConfig(type=channel_type, snr_db=snr_db))
        with torch.no_grad():
            latent = codec.encode(images, snr_db)
            received, _ = channel(latent, snr_db=snr_db, seed=seed)
            decoded = codec.decode(received, snr_db)
            if method == "sc-cdm":
                decoded = self.refiner.refine(decoded, seed=seed)
        return decoded


def evaluate(cfg: ExperimentConfig, checkpoints: dict[str, str],
             methods: Optional[tuple[str, ...]] = None,
             out_dir: Optional[str] = None,
             channel_types: Optional[tuple[str, ...]] = None,
             limit: Optional[int] = None) -> EvalResult:
    """Run every requested (method, channel, SNR) cell and emit CSV/plots/grids.

    Methods whose checkpoints are missing are skipped with a warning and
    recorded in the manifest.  Identical configs and seeds reproduce the CSV
    byte for byte.
    """
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = tuple(methods or cfg.methods)
    channel_types = tuple(channel_types or (cfg.channel.type,))
    manifest = RunManifest(cfg.config_hash(), out)
    runner = _MethodRunner(cfg, checkpoints)
    active, skipped = [], []
    for m in methods:
        if runner.available(m):
            active.append(m)
        else:
            skipped.append(m)
            warnings.warn(f"skipping method {m!r}: checkpoint not provided")
    manifest.record("skipped_methods", skipped)
    images = load_dataset(cfg.dataset.path, "test", limit=limit or cfg.dataset.eval_size,
                          seed=cfg.dataset.seed)
    reports: list[MetricReport] = []
    outputs: dict[tuple, torch.Tensor] = {}
    for channel_type in channel_types:
        for method in active:
            for snr in cfg.test_snr_set:
                seed = derived_seed(cfg.seed, "eval", method, channel_type, snr)
                recon = runner.transmit(method, images, channel_type, snr, seed)
                cid = make_config_id(method, channel_type, snr)
                reports.append(MetricReport("psnr", psnr_per_image(images, recon), cid))
                reports.append(MetricReport("ssim", ssim_per_image(images, recon), cid))
                if snr == cfg.grid_snr_db:
                    outputs[(channel_type, method)] = recon[:cfg.grid_images]
    rows = aggregate(reports)
    csv_path = out / "results.csv"
    write_csv(rows, csv_path)
    manifest.add_artifact(csv_path)
    plot_paths = []
    for channel_type in channel_types:
        p = plot_psnr_vs_snr(rows, channel_type, out / f"psnr_vs_snr_{channel_type}.svg")
        if p is not None:
            plot_paths.append(p)
            manifest.add_artifact(p)
    grid_paths = []
    for channel_type in channel_types:
        cell = {m: v for (ct, m), v in outputs.items() if ct == channel_type}
        if cell:
            p = image_grid(images[:cfg.grid_images], cell, rows, channel_type,
                           cfg.grid_snr_db, out / f"grid_{channel_type}_snr{cfg.grid_snr_db:g}.png")
            grid_paths.append(p)
            manifest.add_artifact(p)
    manifest_path = manifest.write()
    return EvalResult(rows=rows, csv_path=csv_path, plot_paths=plot_paths,
                      grid_paths=grid_paths, manifest_path=manifest_path, skipped=skipped)


def ablate(cfg: ExperimentConfig, codec_ckpt: str, refiner_ckpt: str,
           out_dir: Optional[str] = None, limit: Optional[int] = None) -> EvalResult:
    """Paired rows for the full system vs the codec alone (no fine-tuning stage),
    sharing one codec checkpoint so the refiner is the only difference."""
    checkpoints = {"codec": codec_ckpt, "refiner": refiner_ckpt}
    return evaluate(cfg, checkpoints, methods=("nsf", "sc-cdm"), out_dir=out_dir, limit=limit)


def plot_psnr_vs_snr(rows: list[dict], channel_type: str, path: Path) -> Optional[Path]:
    """Line plot of mean PSNR against SNR for each method on one channel."""
    selected = [r for r in rows if r["channel"] == channel_type]
    if not selected:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in sorted({r["method"] for r in selected}):
        pts = sorted((r["snr_db"], r["psnr"]) for r in selected if r["method"] == method)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("PSNR (dB)")
    ax.set_title(f"{channel_type} channel")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def image_grid(originals: torch.Tensor, recon_by_method: dict[str, torch.Tensor],
               rows: list[dict], channel_type: str, snr_db: float, path: Path) -> Path:
    """Original row plus one row per method; cells are annotated with PSNR and
    the percentage PSNR gain over the convolutional reference row."""
    ref = {}
    methods = sorted(recon_by_method)
    if REFERENCE_METHOD in recon_by_method:
        ref_batch = recon_by_method[REFERENCE_METHOD]
        ref = {i: psnr_per_image(originals[i:i + 1], ref_batch[i:i + 1])[0]
               for i in range(originals.shape[0])}
    n_cols = originals.shape[0]
    n_rows = 1 + len(methods)
    fig, axes = plt.subplots(n_rows, n_cols, figsize=(2.2 * n_cols, 2.4 * n_rows),
                             squeeze=False)
    for j in range(n_cols):
        axes[0][j].imshow(np.clip(originals[j].numpy(), 0, 1))
        axes[0][j].set_axis_off()
        if j == 0:
            axes[0][j].set_title("original", fontsize=9, loc="left")
    for i, method in enumerate(methods, start=1):
        batch = recon_by_method[method]
        for j in range(n_cols):
            ax = axes[i][j]
            ax.imshow(np.clip(batch[j].numpy(), 0, 1))
            ax.set_axis_off()
            p = psnr_per_image(originals[j:j + 1], batch[j:j + 1])[0]
            label = f"{p:.1f} dB"
            if ref and method != REFERENCE_METHOD and ref[j] > 0:
                label += f" ({100.0 * (p - ref[j]) / ref[j]:+.1f}%)"
            ax.set_title(label, fontsize=8)
            if j == 0:
                ax.text(-0.1, 0.5, method, transform=ax.transAxes, fontsize=9,
                        rotation=90, va="center", ha="right")
    fig.suptitle(f"{channel_type} channel, SNR {snr_db:g} dB", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
