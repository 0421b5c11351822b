"""Command-line entry point for the experiment harness."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .evaluate import ablate, evaluate
from .training import train_codec, train_refiner

PROG = "semcom"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config file (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override the experiment seed")
    parser.add_argument("--limit", type=int, default=None,
                        help="cap the number of images (smoke mode)")
    parser.add_argument("--out", default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG,
                                     description="semantic image communication experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-codec", help="train the joint source-channel codec")
    _add_common(p)
    p.add_argument("--resume", default=None, help="resume from a codec checkpoint")

    p = sub.add_parser("train-refiner", help="train the semantic fine-tuning module")
    _add_common(p)
    p.add_argument("--codec-ckpt", default=None,
                   help="codec checkpoint (default <out>/codec_swin.pt)")
    p.add_argument("--stage-a-only", action="store_true",
                   help="run only the first training stage (no diffusion loss)")

    p = sub.add_parser("eval", help="evaluate methods over the SNR grid")
    _add_common(p)
    p.add_argument("--codec-ckpt", default=None)
    p.add_argument("--cnn-ckpt", default=None)
    p.add_argument("--refiner-ckpt", default=None)
    p.add_argument("--methods", nargs="+", default=None)

    p = sub.add_parser("ablate", help="paired evaluation with and without the refiner")
    _add_common(p)
    p.add_argument("--codec-ckpt", default=None)
    p.add_argument("--refiner-ckpt", default=None)

    p = sub.add_parser("baseline", help="run the JPEG+LDPC+QAM baseline over the SNR grid")
    _add_common(p)

    p = sub.add_parser("plot", help="regenerate plots from a results CSV")
    _add_common(p)
    p.add_argument("--csv", default=None, help="results CSV (default <out>/results.csv)")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    if args.limit is not None:
        cfg = dataclasses.replace(
            cfg, dataset=dataclasses.replace(cfg.dataset, train_size=args.limit,
                                             eval_size=min(cfg.dataset.eval_size, args.limit)))
    return cfg


def _default_ckpt(cfg: ExperimentConfig, name: str, override) -> str:
    return override if override else str(Path(cfg.out_dir) / name)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load(args)
        if args.command == "train-codec":
            path = train_codec(cfg, resume_from=args.resume)
            print(f"codec checkpoint written to {path}")
        elif args.command == "train-refiner":
            codec_ckpt = _default_ckpt(cfg, "codec_swin.pt", args.codec_ckpt)
            path = train_refiner(cfg, codec_ckpt, stage_a_only=args.stage_a_only)
            print(f"refiner checkpoint written to {path}")
        elif args.command == "eval":
            checkpoints = {}
            codec_ckpt = _default_ckpt(cfg, "codec_swin.pt", args.codec_ckpt)
            if Path(codec_ckpt).exists():
                checkpoints["codec"] = codec_ckpt
            cnn_ckpt = _default_ckpt(cfg, "codec_cnn.pt", args.cnn_ckpt)
            if Path(cnn_ckpt).exists():
                checkpoints["cnn_codec"] = cnn_ckpt
            refiner_ckpt = _default_ckpt(cfg, "refiner.pt", args.refiner_ckpt)
            if Path(refiner_ckpt).exists():
                checkpoints["refiner"] = refiner_ckpt
            methods = tuple(args.methods) if args.methods else None
            result = evaluate(cfg, checkpoints, methods=methods)
            print(f"results written to {result.csv_path}")
            if result.skipped:
                print(f"skipped methods (no checkpoint): {', '.join(result.skipped)}")
        elif args.command == "ablate":
            codec_ckpt = _default_ckpt(cfg, "codec_swin.pt", args.codec_ckpt)
            refiner_ckpt = _default_ckpt(cfg, "refiner.pt", args.refiner_ckpt)
            result = ablate(cfg, codec_ckpt, refiner_ckpt)
            print(f"ablation results written to {result.csv_path}")
        elif args.command == "baseline":
            result = evaluate(cfg, {}, methods=("jpeg-ldpc-qam",))
            print(f"baseline results written to {result.csv_path}")
        elif args.command == "plot":
            from .evaluate import plot_psnr_vs_snr
            import csv as csv_mod
            csv_path = Path(args.csv or Path(cfg.out_dir) / "results.csv")
            if not csv_path.exists():
                raise FileNotFoundError(f"results CSV not found: {csv_path}")
            with open(csv_path) as fh:
                rows = [{"method": r["method"], "channel": r["channel"],
                         "snr_db": float(r["snr_db"]), "psnr": float(r["psnr"]),
                         "ssim": float(r["ssim"]), "n": int(r["n"])}
                        for r in csv_mod.DictReader(fh)]
            for channel_type in sorted({r["channel"] for r in rows}):
                out = Path(cfg.out_dir) / f"psnr_vs_snr_{channel_type}.svg"
                out.parent.mkdir(parents=True, exist_ok=True)
                plot_psnr_vs_snr(rows, channel_type, out)
                print(f"plot written to {out}")
    except (FileNotFoundError, ConfigError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
