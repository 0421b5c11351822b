import dataclasses
import json

import numpy as np
import pytest
import torch

from semcom.channel import ChannelConfig
from semcom.checkpoint import load_checkpoint, save_checkpoint
from semcom.harness import (CodecConfig, ConfigError, DatasetConfig, ExperimentConfig,
                            RefinerTrainConfig, ablate, evaluate, load_config,
                            load_dataset, save_config, train_codec, train_refiner)
from semcom.harness.cli import main
from semcom.harness.manifest import RunManifest, file_sha256


def tiny_config(out_dir: str, **overrides) -> ExperimentConfig:
    base = dict(
        dataset=DatasetConfig(path="synthetic", train_size=32, eval_size=8, seed=0),
        codec=CodecConfig(embed_dim=8, num_heads=2, batch_size=8, lr=1e-3, epochs=2),
        refiner=RefinerTrainConfig(base_dim=8, c_prime=8, batch_size=8, lr=1e-3,
                                   stage_a_epochs=1, stage_b_epochs=1),
        channel=ChannelConfig(type="awgn", snr_db=10.0, seed=0),
        test_snr_set=(0.0, 15.0),
        grid_snr_db=15.0,
        seed=3,
        out_dir=out_dir,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# --------------------------------------------------------------------- config

def test_load_config_roundtrip(tmp_path):
    cfg = tiny_config(str(tmp_path / "out"))
    path = tmp_path / "config.json"
    save_config(cfg, path)
    loaded = load_config(path)
    assert loaded == cfg
    assert loaded.config_hash() == cfg.config_hash()


def test_load_config_unknown_key(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"seeds": 3}))
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(path)


def test_load_config_unknown_nested_key(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"codec": {"widht": 8}}))
    with pytest.raises(ConfigError, match="codec.*widht"):
        load_config(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.json"):
        load_config(tmp_path / "nope.json")


def test_config_rejects_unsorted_snr_set(tmp_path):
    with pytest.raises(ConfigError, match="sorted"):
        tiny_config(str(tmp_path), test_snr_set=(15.0, 0.0))


def test_config_rejects_unknown_method(tmp_path):
    with pytest.raises(ConfigError, match="method"):
        tiny_config(str(tmp_path), methods=("vae",))


def test_config_channel_snr_list_and_baseline_block(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "channel": {"type": "rayleigh", "snr_db": [0, 3, 6], "mask_density": 0.9},
        "baseline": {"jpeg_quality": 50, "ldpc": {"n": 1024, "k": 512, "max_iters": 25},
                     "qam_order": 4},
    }))
    cfg = load_config(path)
    assert cfg.channel.snr_db == (0.0, 3.0, 6.0)
    assert cfg.baseline.jpeg_quality == 50
    assert cfg.baseline.ldpc.max_iters == 25
    bc = cfg.baseline.to_baseline_config()
    assert (bc.ldpc_n, bc.ldpc_k, bc.ldpc_max_iters) == (1024, 512, 25)
    from semcom.channel import Channel
    import torch
    with pytest.raises(ValueError, match="sweep"):
        Channel(cfg.channel)(torch.randn(2, 4, 4, 8))


def test_config_rejects_bad_ldpc_key(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"baseline": {"ldpc": {"iterations": 25}}}))
    with pytest.raises(ConfigError, match="baseline.ldpc"):
        load_config(path)


CIFAR_CANDIDATES = ("data/cifar-10-batches-py", "/root/data/cifar-10-batches-py")


@pytest.mark.skipif(not any(__import__("pathlib").Path(p, "data_batch_1").exists()
                            for p in CIFAR_CANDIDATES),
                    reason="CIFAR-10 batch files not present")
def test_cifar_train_split_counts():
    root = next(p for p in CIFAR_CANDIDATES
                if __import__("pathlib").Path(p, "data_batch_1").exists())
    images = load_dataset(root, "train")
    assert images.shape == (50000, 32, 32, 3)


# ----------------------------------------------------------------------- data

def test_synthetic_dataset_deterministic():
    a = load_dataset("synthetic", "train", limit=16, seed=5)
    b = load_dataset("synthetic", "train", limit=16, seed=5)
    assert torch.equal(a, b)
    c = load_dataset("synthetic", "train", limit=16, seed=6)
    assert not torch.equal(a, c)


def test_synthetic_dataset_limit():
    images = load_dataset("synthetic", "train", limit=500, seed=0)
    assert images.shape == (500, 32, 32, 3)
    assert images.min() >= 0.0 and images.max() <= 1.0


def test_synthetic_splits_differ():
    train = load_dataset("synthetic", "train", limit=8, seed=0)
    test = load_dataset("synthetic", "test", limit=8, seed=0)
    assert not torch.equal(train, test)


def test_dataset_rejects_bad_split():
    with pytest.raises(ValueError, match="split"):
        load_dataset("synthetic", "validation")


def test_missing_cifar_directory(tmp_path):
    with pytest.raises(FileNotFoundError, match="data_batch_1"):
        load_dataset(str(tmp_path), "train")


# ----------------------------------------------------------------- checkpoint

def test_checkpoint_schema(tmp_path):
    path = save_checkpoint(tmp_path / "m.pt", "codec", {"w": torch.ones(2)},
                           {"backbone": "swin"})
    payload = load_checkpoint(path, expected_kind="codec")
    assert payload["schema_version"] == 1
    assert payload["metadata"]["backbone"] == "swin"
    with pytest.raises(ValueError, match="refiner"):
        load_checkpoint(path, expected_kind="refiner")


def test_checkpoint_bad_version(tmp_path):
    torch.save({"schema_version": 99}, tmp_path / "bad.pt")
    with pytest.raises(ValueError, match="schema_version"):
        load_checkpoint(tmp_path / "bad.pt")


def test_checkpoint_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "none.pt")


# ------------------------------------------------------------------- training

def test_train_codec_logs_history(tmp_path):
    cfg = tiny_config(str(tmp_path))
    path = train_codec(cfg)
    payload = load_checkpoint(path, expected_kind="codec")
    assert len(payload["history"]) == 2
    assert all(h["mse"] > 0 for h in payload["history"])
    assert payload["metadata"]["train_snr_range"] == [1.0, 13.0]
    manifest = json.loads((tmp_path / "manifest_codec_swin.json").read_text())
    assert manifest["artifacts"][0]["sha256"] == file_sha256(path)
    assert len(manifest["per_epoch_losses"]) == 2


def test_train_codec_zero_lr_keeps_loss_constant(tmp_path):
    cfg = tiny_config(str(tmp_path), codec=CodecConfig(embed_dim=8, num_heads=2,
                                                       batch_size=8, lr=0.0, epochs=3))
    payload = load_checkpoint(train_codec(cfg), expected_kind="codec")
    losses = [h["mse"] for h in payload["history"]]
    assert losses[0] == pytest.approx(losses[-1], rel=1e-6)


def test_train_codec_resume_matches_uninterrupted(tmp_path):
    cfg_full = tiny_config(str(tmp_path / "full"),
                           codec=CodecConfig(embed_dim=8, num_heads=2, batch_size=8,
                                             lr=1e-3, epochs=3))
    full = load_checkpoint(train_codec(cfg_full), expected_kind="codec")

    cfg_short = dataclasses.replace(cfg_full, out_dir=str(tmp_path / "part"),
                                    codec=dataclasses.replace(cfg_full.codec, epochs=1))
    part_path = train_codec(cfg_short)
    cfg_resumed = dataclasses.replace(cfg_short,
                                      codec=dataclasses.replace(cfg_short.codec, epochs=3))
    resumed = load_checkpoint(train_codec(cfg_resumed, resume_from=part_path),
                              expected_kind="codec")

    assert [h["mse"] for h in full["history"]] == [h["mse"] for h in resumed["history"]]
    for key, value in full["model_state"].items():
        assert torch.equal(value, resumed["model_state"][key])


def test_train_refiner_requires_codec(tmp_path):
    cfg = tiny_config(str(tmp_path))
    with pytest.raises(FileNotFoundError):
        train_refiner(cfg, str(tmp_path / "missing.pt"))


def test_non_finite_loss_aborts_with_diagnostic():
    from semcom.harness.training import _check_finite
    with pytest.raises(RuntimeError, match="non-finite at epoch 2, step 5"):
        _check_finite(torch.tensor(float("nan")), "codec", 2, 5)


def test_train_refiner_stage_a_only_never_computes_l2(tmp_path):
    cfg = tiny_config(str(tmp_path))
    codec_path = train_codec(cfg)
    refiner_path = train_refiner(cfg, codec_path, stage_a_only=True)
    payload = load_checkpoint(refiner_path, expected_kind="refiner")
    assert len(payload["history"]) == 1
    assert all(h["stage"] == "A" and h["l2"] is None for h in payload["history"])


def test_train_refiner_two_stage_history(tmp_path):
    cfg = tiny_config(str(tmp_path))
    codec_path = train_codec(cfg)
    payload = load_checkpoint(train_refiner(cfg, codec_path), expected_kind="refiner")
    stages = [h["stage"] for h in payload["history"]]
    assert stages == ["A", "B"]
    assert payload["history"][1]["l2"] is not None
    assert payload["history"][1]["joint"] == pytest.approx(
        payload["history"][1]["l1"] + payload["history"][1]["l2"])


def test_training_reproducible(tmp_path):
    cfg_a = tiny_config(str(tmp_path / "a"))
    cfg_b = tiny_config(str(tmp_path / "b"))
    pa = load_checkpoint(train_codec(cfg_a))
    pb = load_checkpoint(train_codec(cfg_b))
    assert [h["mse"] for h in pa["history"]] == [h["mse"] for h in pb["history"]]


# ----------------------------------------------------------------- evaluation

@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    cfg = tiny_config(str(out))
    codec_path = train_codec(cfg)
    refiner_path = train_refiner(cfg, codec_path)
    cnn_cfg = dataclasses.replace(cfg, codec=dataclasses.replace(cfg.codec, backbone="cnn"))
    cnn_path = train_codec(cnn_cfg)
    return cfg, {"codec": str(codec_path), "refiner": str(refiner_path),
                 "cnn_codec": str(cnn_path)}


def test_evaluate_output_counts(trained, tmp_path):
    cfg, ckpts = trained
    cfg = dataclasses.replace(cfg, out_dir=str(tmp_path))
    result = evaluate(cfg, ckpts, methods=("nsf", "sc-cdm"))
    assert len(result.rows) == 4  # 2 methods x 1 channel x 2 SNRs
    assert result.csv_path.exists()
    assert len(result.plot_paths) == 1
    assert len(result.grid_paths) == 1
    assert result.skipped == []


def test_evaluate_deterministic_csv(trained, tmp_path):
    cfg, ckpts = trained
    cfg_a = dataclasses.replace(cfg, out_dir=str(tmp_path / "a"))
    cfg_b = dataclasses.replace(cfg, out_dir=str(tmp_path / "b"))
    ra = evaluate(cfg_a, ckpts, methods=("nsf",))
    rb = evaluate(cfg_b, ckpts, methods=("nsf",))
    assert ra.csv_path.read_bytes() == rb.csv_path.read_bytes()


def test_evaluate_skips_missing_checkpoints(trained, tmp_path):
    cfg, ckpts = trained
    cfg = dataclasses.replace(cfg, out_dir=str(tmp_path))
    with pytest.warns(UserWarning, match="skipping"):
        result = evaluate(cfg, {"codec": ckpts["codec"]},
                          methods=("nsf", "deepjscc-cnn", "sc-cdm"))
    assert result.skipped == ["deepjscc-cnn", "sc-cdm"]
    manifest = json.loads(result.manifest_path.read_text())
    assert manifest["skipped_methods"] == ["deepjscc-cnn", "sc-cdm"]
    assert len(result.rows) == 2


def test_evaluate_full_method_grid(trained, tmp_path):
    cfg, ckpts = trained
    cfg = dataclasses.replace(cfg, out_dir=str(tmp_path))
    result = evaluate(cfg, ckpts,
                      methods=("nsf", "sc-cdm", "deepjscc-cnn", "jpeg-ldpc-qam"))
    assert len(result.rows) == 8
    methods = {r["method"] for r in result.rows}
    assert methods == {"nsf", "sc-cdm", "deepjscc-cnn", "jpeg-ldpc-qam"}


def test_evaluate_covers_both_channels(trained, tmp_path):
    cfg, ckpts = trained
    cfg = dataclasses.replace(cfg, out_dir=str(tmp_path))
    result = evaluate(cfg, ckpts, methods=("nsf",),
                      channel_types=("awgn", "rayleigh"))
    assert len(result.rows) == 4  # 1 method x 2 channels x 2 SNRs
    assert {r["channel"] for r in result.rows} == {"awgn", "rayleigh"}
    assert len(result.plot_paths) == 2


def test_baseline_curve_is_flat_outside_the_cliff(tmp_path):
    cfg = tiny_config(str(tmp_path),
                      dataset=DatasetConfig(path="synthetic", train_size=8,
                                            eval_size=4, seed=0),
                      test_snr_set=(0.0, 1.0, 12.0, 15.0), grid_snr_db=15.0)
    result = evaluate(cfg, {}, methods=("jpeg-ldpc-qam",))
    psnr_at = {r["snr_db"]: r["psnr"] for r in result.rows}
    # Mid-gray floor below the decoding threshold, JPEG ceiling above it.
    assert psnr_at[0.0] == pytest.approx(psnr_at[1.0], abs=1e-9)
    assert psnr_at[12.0] == pytest.approx(psnr_at[15.0], abs=1e-9)
    assert psnr_at[15.0] > psnr_at[0.0] + 10.0


def test_ablate_pairs_rows_from_shared_codec(trained, tmp_path):
    cfg, ckpts = trained
    cfg = dataclasses.replace(cfg, out_dir=str(tmp_path))
    result = ablate(cfg, ckpts["codec"], ckpts["refiner"])
    methods = sorted({r["method"] for r in result.rows})
    assert methods == ["nsf", "sc-cdm"]
    nsf = {r["snr_db"] for r in result.rows if r["method"] == "nsf"}
    sc = {r["snr_db"] for r in result.rows if r["method"] == "sc-cdm"}
    assert nsf == sc == set(cfg.test_snr_set)


def test_manifest_hashes_artifacts(trained, tmp_path):
    cfg, ckpts = trained
    cfg = dataclasses.replace(cfg, out_dir=str(tmp_path))
    result = evaluate(cfg, ckpts, methods=("nsf",))
    manifest = json.loads(result.manifest_path.read_text())
    listed = {a["path"]: a["sha256"] for a in manifest["artifacts"]}
    assert "results.csv" in listed
    assert listed["results.csv"] == file_sha256(result.csv_path)
    assert manifest["config_hash"] == cfg.config_hash()


def test_manifest_records(tmp_path):
    m = RunManifest("abc", tmp_path)
    (tmp_path / "x.txt").write_text("hello")
    m.add_artifact(tmp_path / "x.txt")
    m.record("note", 1)
    path = m.write()
    data = json.loads(path.read_text())
    assert data["note"] == 1
    assert data["artifacts"][0]["path"] == "x.txt"
    assert data["wall_clock_s"] >= 0


# ------------------------------------------------------------------------ cli

def test_cli_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "semcom" in capsys.readouterr().out


def test_cli_unknown_flag_exits_two(capsys):
    assert main(["train-codec", "--config", "x.json", "--bogus"]) == 2


def test_cli_missing_config_exits_one(capsys, tmp_path):
    missing = tmp_path / "absent.json"
    assert main(["train-codec", "--config", str(missing)]) == 1
    err = capsys.readouterr().err
    assert "absent.json" in err


def test_cli_train_and_eval_flow(tmp_path, capsys):
    cfg = tiny_config(str(tmp_path / "out"))
    cfg_path = tmp_path / "config.json"
    save_config(cfg, cfg_path)
    assert main(["train-codec", "--config", str(cfg_path)]) == 0
    assert main(["train-refiner", "--config", str(cfg_path)]) == 0
    assert main(["ablate", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "results" in out
    assert (tmp_path / "out" / "results.csv").exists()
    assert main(["plot", "--config", str(cfg_path)]) == 0


def test_cli_baseline_smoke(tmp_path):
    cfg = tiny_config(str(tmp_path / "out"),
                      dataset=DatasetConfig(path="synthetic", train_size=8,
                                            eval_size=2, seed=0),
                      test_snr_set=(15.0,))
    cfg_path = tmp_path / "config.json"
    save_config(cfg, cfg_path)
    assert main(["baseline", "--config", str(cfg_path)]) == 0
    assert (tmp_path / "out" / "results.csv").exists()


def test_cli_seed_and_limit_overrides(tmp_path):
    cfg = tiny_config(str(tmp_path / "out"))
    cfg_path = tmp_path / "config.json"
    save_config(cfg, cfg_path)
    assert main(["train-codec", "--config", str(cfg_path), "--seed", "9",
                 "--limit", "16", "--out", str(tmp_path / "alt")]) == 0
    payload = load_checkpoint(tmp_path / "alt" / "codec_swin.pt")
    assert payload["metadata"]["seed"] == 9
