import csv
import json
import subprocess
import sys

import pytest

from phd.cli import UsageError, build_config, run

TINY_CONFIG = {
    "data": {"sequences_per_motif": 5, "length_range": [60, 64], "num_actors": 5, "seed": 3},
    "train": {"dim": 16, "hidden": 32, "batch_size": 4, "encoder_epochs": 1, "ar_epochs": 1, "lr": 1e-3,
              "windows_per_epoch": 4, "window_stride": 10},
    "eval": {"horizons": [1, 5, 25], "gradcheck_coords": 20},
}


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Runs every subcommand once on a tiny corpus."""
    root = tmp_path_factory.mktemp("run")
    cfg = root / "tiny.json"
    cfg.write_text(json.dumps(TINY_CONFIG))
    out = root / "out"
    base = ["--config", str(cfg), "--out", str(out)]
    codes = {}
    for cmd in (["gen-data"], ["train-encoder"], ["train-ar"], ["train-ar", "--variant", "latent-no-strip"],
                ["train-ar", "--variant", "pose"], ["rollout"], ["evaluate"], ["evaluate", "--model", "nn"],
                ["discover-statues", "--motif", "windup_strike"], ["compare-baselines"]):
        codes[" ".join(cmd)] = run(cmd + base)
    return root, out, codes


def test_no_arguments_is_usage_error(capsys):
    assert run([]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["gen-data", "--set", "data.colour=1"],
                                  ["gen-data", "--set", "nonsense"], ["train-ar", "--variant", "rnn"]])
def test_bad_arguments_exit_2(argv, tmp_path, capsys):
    assert run(argv + ["--out", str(tmp_path)]) == 2
    assert "usage" in capsys.readouterr().err


def test_bad_thread_env(monkeypatch, tmp_path):
    monkeypatch.setenv("PHD_NUM_THREADS", "zero")
    assert run(["gradcheck", "--out", str(tmp_path)]) == 2


def test_build_config_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"train": {"lr": 0.5}}))
    cfg = build_config(path, ["train.weights.w_strip=0", "eval.horizons=[1,2]"], seed=7)
    assert cfg.train.lr == 0.5 and cfg.train.weights.w_strip == 0
    assert cfg.eval.horizons == (1, 2)
    assert cfg.train.seed == 7 and cfg.data.seed == 7
    assert build_config().digest() == build_config().digest()
    assert build_config(seed=1).digest() != build_config().digest()
    with pytest.raises(UsageError):
        build_config(None, ["train.width=3"])


def test_missing_data_exit_1(tmp_path):
    assert run(["train-encoder", "--out", str(tmp_path)]) == 1
    assert "error" in (tmp_path / "run.log").read_text().lower()


def test_gradcheck_command(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PHD_NUM_THREADS", "1")
    assert run(["gradcheck", "--out", str(tmp_path), "--set", "eval.gradcheck_coords=20"]) == 0
    printed = capsys.readouterr().out
    assert "encoder" in printed and "autoregressor" in printed
    rows = _rows(tmp_path / "gradcheck.csv")
    assert {r["loss"] for r in rows} == {"encoder", "autoregressor"}
    assert all(float(r["max_rel_error"]) < 1e-4 for r in rows)


def test_pipeline_exit_codes(pipeline):
    _, _, codes = pipeline
    assert all(c == 0 for c in codes.values()), codes


def test_pipeline_artifacts(pipeline):
    _, out, _ = pipeline
    for name in ("train.jsonl", "val.jsonl", "test.jsonl", "splits.csv", "encoder.ckpt", "encoder_curve.csv",
                 "ar_latent.ckpt", "ar_latent_nostrip.ckpt", "ar_pose.ckpt", "rollout_latent.csv",
                 "report_latent.csv", "report_latent.json", "report_nn.csv", "statues.csv", "statue_traces.csv",
                 "compare_baselines.csv"):
        assert (out / name).exists(), name
    splits = _rows(out / "splits.csv")
    assert sum(int(r["sequences"]) for r in splits) == 20
    rollout = _rows(out / "rollout_latent.csv")
    assert {int(r["step"]) for r in rollout} == set(range(30))
    report = _rows(out / "report_latent.csv")
    assert {int(r["horizon"]) for r in report} == {1, 5, 25}
    statues = _rows(out / "statues.csv")
    assert statues and all(r["motif"] == "windup_strike" for r in statues)


def test_run_log_records_provenance(pipeline):
    _, out, _ = pipeline
    text = (out / "run.log").read_text()
    for cmd in ("gen-data", "train-encoder", "compare-baselines"):
        assert f"command {cmd} seed 0" in text
    assert "version 0.1.0+g" in text


def test_compare_baselines_table(pipeline):
    _, out, _ = pipeline
    rows = _rows(out / "compare_baselines.csv")
    assert {r["model"] for r in rows} == {"AR-latent", "AR-latent-no-strip", "AR-pose", "Constant", "NN"}
    assert {r["dtw"] for r in rows} == {"dtw", "no-dtw"}
    assert {r["metric"] for r in rows} == {"reconstruction_mm", "mpjpe_mm", "pck"}
    assert len(rows) == 5 * 3 * 3 * 2


def test_pipeline_is_deterministic(pipeline, tmp_path):
    root, out, _ = pipeline
    again = tmp_path / "again"
    base = ["--config", str(root / "tiny.json"), "--out", str(again)]
    for cmd in (["gen-data"], ["train-encoder"], ["train-ar"], ["evaluate"]):
        assert run(cmd + base) == 0
    for name in ("train.jsonl", "encoder.ckpt", "ar_latent.ckpt", "encoder_curve.csv", "report_latent.csv"):
        assert (again / name).read_bytes() == (out / name).read_bytes(), name


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "phd", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gen-data" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "phd"], capture_output=True, text=True)
    assert proc.returncode == 2
