"""Two-phase training: the codec end to end, then the semantic refiner.

All randomness (batch order, per-step training SNR, channel noise seeds) is
derived from the experiment seed and the step index, never from mutable
generator state.  Epochs therefore see identical noise realizations, per-epoch
losses are directly comparable, and a resumed run reproduces an uninterrupted
one exactly.
"""

from __future__ import annotations

import hashlib
import time
from pathlib import Path
from typing import Optional

import torch

from ..channel import Channel
from ..checkpoint import load_checkpoint, save_checkpoint
from ..codec import SemanticCodec, SwinCodecConfig, codec_loss
from ..refiner import SemanticRefiner, loss_l1, loss_l2
from ..refiner.schedule import forward_diffuse
from .config import CodecConfig, ExperimentConfig
from .data import load_dataset
from .manifest import RunManifest


def _write_training_manifest(cfg: ExperimentConfig, out: Path, ckpt_path: Path,
                             history: list, name: str, started: float) -> None:
    manifest = RunManifest(cfg.config_hash(), out, started=started)
    manifest.add_artifact(ckpt_path)
    manifest.record("per_epoch_losses", history)
    manifest.write(name=name)


def derived_seed(*parts) -> int:
    """Stable 63-bit seed from a tuple of labels and numbers."""
    text = "/".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63)


def build_codec(cfg: CodecConfig, init_seed: int) -> SemanticCodec:
    torch.manual_seed(init_seed)
    if cfg.backbone == "swin":
        swin = SwinCodecConfig(embed_dim=cfg.embed_dim, num_heads=cfg.num_heads,
                               window_sizes=tuple(cfg.window_sizes),
                               depths=tuple(cfg.depths),
                               latent_channels=cfg.latent_channels)
        return SemanticCodec("swin", cfg.latent_channels, swin_config=swin)
    return SemanticCodec("cnn", cfg.latent_channels, cnn_width=cfg.cnn_width)


def codec_metadata(cfg: ExperimentConfig) -> dict:
    c = cfg.codec
    return {
        "backbone": c.backbone,
        "latent_channels": c.latent_channels,
        "embed_dim": c.embed_dim,
        "num_heads": c.num_heads,
        "window_sizes": list(c.window_sizes),
        "depths": list(c.depths),
        "cnn_width": c.cnn_width,
        "train_snr_range": list(cfg.train_snr_range),
        "channel_type": cfg.channel.type,
        "seed": cfg.seed,
    }


def codec_from_checkpoint(payload: dict) -> SemanticCodec:
    meta = payload["metadata"]
    cfg = CodecConfig(backbone=meta["backbone"], latent_channels=meta["latent_channels"],
                      embed_dim=meta["embed_dim"], num_heads=meta["num_heads"],
                      window_sizes=tuple(meta["window_sizes"]), depths=tuple(meta["depths"]),
                      cnn_width=meta["cnn_width"])
    codec = build_codec(cfg, meta["seed"])
    codec.load_state_dict(payload["model_state"])
    codec.eval()
    return codec


def _step_plan(cfg: ExperimentConfig, n_images: int, batch_size: int, label: str):
    """Per-step (batch index order, snr, noise seed); identical across epochs."""
    order_g = torch.Generator().manual_seed(derived_seed(cfg.seed, label, "order"))
    order = torch.randperm(n_images, generator=order_g)
    lo, hi = cfg.train_snr_range
    steps = []
    for step, start in enumerate(range(0, n_images, batch_size)):
        snr_g = torch.Generator().manual_seed(derived_seed(cfg.seed, label, "snr", step))
        snr = lo + (hi - lo) * torch.rand(1, generator=snr_g).item()
        noise_seed = derived_seed(cfg.seed, label, "noise", step)
        steps.append((order[start:start + batch_size], snr, noise_seed))
    return steps


def _check_finite(loss: torch.Tensor, what: str, epoch: int, step: int):
    if not torch.isfinite(loss):
        raise RuntimeError(f"{what} loss became non-finite at epoch {epoch}, step {step}: "
                           f"{loss.item()!r}; lower the learning rate or check the data")


def train_codec(cfg: ExperimentConfig, out_dir: Optional[str] = None,
                resume_from: Optional[str] = None, limit: Optional[int] = None) -> Path:
    """End-to-end codec training through the simulated channel (MSE objective).

    Returns the checkpoint path; per-epoch mean MSE is stored in the
    checkpoint history.
    """
    started = time.time()
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_size = limit or cfg.dataset.train_size
    images = load_dataset(cfg.dataset.path, "train", limit=train_size, seed=cfg.dataset.seed)
    codec = build_codec(cfg.codec, derived_seed(cfg.seed, "codec-init", cfg.codec.backbone))
    optimizer = torch.optim.Adam(codec.parameters(), lr=cfg.codec.lr)
    start_epoch = 0
    history: list[dict] = []
    if resume_from is not None:
        payload = load_checkpoint(resume_from, expected_kind="codec")
        codec.load_state_dict(payload["model_state"])
        optimizer.load_state_dict(payload["optimizer_state"])
        start_epoch = payload["epoch"]
        history = list(payload["history"])
    channel = Channel(cfg.channel)
    steps = _step_plan(cfg, images.shape[0], cfg.codec.batch_size, f"codec-{cfg.codec.backbone}")
    ckpt_path = out / f"codec_{cfg.codec.backbone}.pt"
    codec.train()
    steps_per_epoch = len(steps)
    for epoch in range(start_epoch, cfg.codec.epochs):
        total_err = 0.0
        total_px = 0
        for step, (idx, snr, noise_seed) in enumerate(steps):
            if cfg.codec.warmup_steps:
                global_step = epoch * steps_per_epoch + step
                scale = min(1.0, (global_step + 1) / cfg.codec.warmup_steps)
                for group in optimizer.param_groups:
                    group["lr"] = cfg.codec.lr * scale
            batch = images[idx]
            latent = codec.encode(batch, snr)
            received, _ = channel(latent, snr_db=snr, seed=noise_seed)
            recon = codec.decode(received, snr)
            loss = codec_loss(batch, recon)
            _check_finite(loss, "codec", epoch, step)
            optimizer.zero_grad()
            loss.backward()
            if cfg.codec.grad_clip:
                torch.nn.utils.clip_grad_norm_(codec.parameters(), cfg.codec.grad_clip)
            optimizer.step()
            total_err += loss.item() * batch.numel()
            total_px += batch.numel()
        history.append({"epoch": epoch, "mse": total_err / total_px})
        save_checkpoint(ckpt_path, "codec", codec.state_dict(), codec_metadata(cfg),
                        optimizer_state=optimizer.state_dict(), history=history,
                        epoch=epoch + 1)
    if not history:
        save_checkpoint(ckpt_path, "codec", codec.state_dict(), codec_metadata(cfg),
                        optimizer_state=optimizer.state_dict(), history=history, epoch=0)
    _write_training_manifest(cfg, out, ckpt_path, history,
                             f"manifest_codec_{cfg.codec.backbone}.json", started)
    return ckpt_path


def refiner_metadata(cfg: ExperimentConfig) -> dict:
    r = cfg.refiner
    return {
        "base_dim": r.base_dim, "c_prime": r.c_prime, "heads": list(r.heads),
        "blocks": list(r.blocks), "timesteps": r.timesteps,
        "beta_start": r.beta_start, "beta_end": r.beta_end,
        "finetune_scope": r.finetune_scope, "seed": cfg.seed,
    }


def build_refiner(cfg: ExperimentConfig, init_seed: int) -> SemanticRefiner:
    torch.manual_seed(init_seed)
    return SemanticRefiner(cfg.refiner.to_refiner_config())


def refiner_from_checkpoint(payload: dict) -> SemanticRefiner:
    from .config import RefinerTrainConfig
    meta = payload["metadata"]
    rcfg = RefinerTrainConfig(base_dim=meta["base_dim"], c_prime=meta["c_prime"],
                              heads=tuple(meta["heads"]), blocks=tuple(meta["blocks"]),
                              timesteps=meta["timesteps"], beta_start=meta["beta_start"],
                              beta_end=meta["beta_end"], finetune_scope=meta["finetune_scope"])
    torch.manual_seed(meta["seed"])
    refiner = SemanticRefiner(rcfg.to_refiner_config())
    refiner.load_state_dict(payload["model_state"])
    refiner.eval()
    return refiner


def _decode_batch(codec: SemanticCodec, channel: Channel, batch: torch.Tensor,
                  snr: float, noise_seed: int) -> torch.Tensor:
    with torch.no_grad():
        latent = codec.encode(batch, snr)
        received, _ = channel(latent, snr_db=snr, seed=noise_seed)
        return codec.decode(received, snr)


def _stage_b_parameters(refiner: SemanticRefiner, scope: str):
    params = list(refiner.eps_model.parameters()) + list(refiner.cond_net.parameters())
    if scope == "all":
        params += list(refiner.recon.parameters())
    elif scope == "modulation":
        params += [p for name, p in refiner.recon.named_parameters() if "modulate" in name]
    else:
        raise ValueError(f"unknown finetune scope {scope!r}")
    return params


def train_refiner(cfg: ExperimentConfig, codec_ckpt: str, out_dir: Optional[str] = None,
                  stage_a_only: bool = False, limit: Optional[int] = None) -> Path:
    """Two-stage refiner training on top of a frozen codec.

    Stage A trains the prior extractor and reconstruction network on the
    image loss; stage B trains the noise predictor and conditioning path
    (fine-tuning the reconstruction network per the configured scope) on the
    joint image + prior loss.  History entries log l1, l2 (None in stage A),
    and the joint loss.
    """
    started = time.time()
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    codec_payload = load_checkpoint(codec_ckpt, expected_kind="codec")
    codec = codec_from_checkpoint(codec_payload)
    train_size = limit or cfg.dataset.train_size
    images = load_dataset(cfg.dataset.path, "train", limit=train_size, seed=cfg.dataset.seed)
    refiner = build_refiner(cfg, derived_seed(cfg.seed, "refiner-init"))
    channel = Channel(cfg.channel)
    steps = _step_plan(cfg, images.shape[0], cfg.refiner.batch_size, "refiner")
    history: list[dict] = []
    sched = refiner.schedule

    def run_epoch(epoch: int, stage: str, optimizer, stage_epoch: int) -> dict:
        sum_l1 = sum_l2 = 0.0
        count = 0
        for step, (idx, snr, noise_seed) in enumerate(steps):
            if cfg.refiner.warmup_steps:
                global_step = stage_epoch * len(steps) + step
                scale = min(1.0, (global_step + 1) / cfg.refiner.warmup_steps)
                for group in optimizer.param_groups:
                    group["lr"] = cfg.refiner.lr * scale
            batch = images[idx]
            decoded = _decode_batch(codec, channel, batch, snr, noise_seed)
            if stage == "A":
                z = refiner.extract_prior(decoded, reference=batch)
                refined = refiner.reconstruct(decoded, z)
                l1 = loss_l1(batch, refined)
                loss = l1
                l2 = None
            else:
                with torch.no_grad():
                    z0 = refiner.extract_prior(decoded, reference=batch)
                cond = refiner.cond_net(decoded)
                g = torch.Generator().manual_seed(derived_seed(cfg.seed, "diffuse", step))
                eps = torch.randn(z0.shape, generator=g, dtype=z0.dtype)
                z_t = forward_diffuse(z0, sched.T, eps, sched)
                z_hat = refiner.denoise_prior(z_t, cond)
                refined = refiner.reconstruct(decoded, z_hat)
                l1 = loss_l1(batch, refined)
                l2 = loss_l2(z_hat, z0)
                loss = l1 + l2
            _check_finite(loss, f"refiner stage {stage}", epoch, step)
            optimizer.zero_grad()
            loss.backward()
            if cfg.refiner.grad_clip:
                torch.nn.utils.clip_grad_norm_(
                    (p for group in optimizer.param_groups for p in group["params"]),
                    cfg.refiner.grad_clip)
            optimizer.step()
            n = batch.shape[0]
            sum_l1 += l1.item() * n
            sum_l2 += (l2.item() if l2 is not None else 0.0) * n
            count += n
        l1_mean = sum_l1 / count
        l2_mean = (sum_l2 / count) if stage == "B" else None
        joint = l1_mean + (l2_mean or 0.0)
        return {"epoch": epoch, "stage": stage, "l1": l1_mean, "l2": l2_mean, "joint": joint}

    ckpt_path = out / "refiner.pt"
    epoch = 0
    opt_a = torch.optim.Adam(
        list(refiner.prior_net.parameters()) + list(refiner.recon.parameters()),
        lr=cfg.refiner.lr)
    for stage_epoch in range(cfg.refiner.stage_a_epochs):
        history.append(run_epoch(epoch, "A", opt_a, stage_epoch))
        epoch += 1
    if not stage_a_only:
        for p in refiner.prior_net.parameters():
            p.requires_grad_(False)
        opt_b = torch.optim.Adam(_stage_b_parameters(refiner, cfg.refiner.finetune_scope),
                                 lr=cfg.refiner.lr)
        for stage_epoch in range(cfg.refiner.stage_b_epochs):
            history.append(run_epoch(epoch, "B", opt_b, stage_epoch))
            epoch += 1
    meta = refiner_metadata(cfg)
    meta["codec_checkpoint"] = str(codec_ckpt)
    save_checkpoint(ckpt_path, "refiner", refiner.state_dict(), meta,
                    history=history, epoch=epoch)
    _write_training_manifest(cfg, out, ckpt_path, history, "manifest_refiner.json", started)
    return ckpt_path
