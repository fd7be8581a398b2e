"""Command-line entry point: ``python -m phd <subcommand> [options]``.

Every subcommand works inside run directories: ``--data DIR`` holds the
``train/val/test.jsonl`` splits written by ``gen-data``, ``--models DIR`` the
checkpoints written by the training subcommands (defaults to ``--out``).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import SyntheticConfig, generate_corpus, read_dataset, split, write_dataset
from .errors import CheckpointError, InvalidArgumentError
from .evaluation import HORIZONS, discover_statues, evaluate
from .evaluation.forecast import (evaluation_windows, forecast_constant, forecast_latent, forecast_nn,
                                  forecast_pose_ar, nn_database_from_samples, window_accuracy_fn)
from .trainer import (TrainConfig, config_hash, load_ar_model, load_encoder_model, loss_gradchecks,
                      train_autoregressor, train_encoder, train_pose_autoregressor)

log = logging.getLogger("phd")

SUBCOMMANDS = ("gen-data", "train-encoder", "train-ar", "rollout", "evaluate", "discover-statues",
               "gradcheck", "compare-baselines")
ENCODER_CKPT = "encoder.ckpt"
AR_CKPTS = {"latent": "ar_latent.ckpt", "latent-no-strip": "ar_latent_nostrip.ckpt", "pose": "ar_pose.ckpt"}


class UsageError(Exception):
    pass


@dataclass
class EvalConfig:
    horizons: tuple = HORIZONS
    conditioning: int = 15
    rollout: int = 30
    stride: int = 25
    split_ratios: tuple = (0.6, 0.2, 0.2)
    split_seed: int = 0
    gradcheck_coords: int = 60
    gradcheck_dim: int = 16

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgumentError(f"unknown eval config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("horizons", "split_ratios"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}


@dataclass
class CliConfig:
    data: SyntheticConfig = field(default_factory=SyntheticConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self):
        d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.data.__dict__.items()}
        return {"data": d, "train": self.train.to_dict(), "eval": self.eval.to_dict()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_config(path=None, overrides=(), seed=None) -> CliConfig:
    raw = {"data": {}, "train": {}, "eval": {}}
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except OSError as e:
            raise UsageError(f"cannot read config {path}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise UsageError(f"config {path} is not valid JSON: {e.msg}") from None
        if not isinstance(loaded, dict) or set(loaded) - set(raw):
            raise UsageError(f"config sections must be among {sorted(raw)}")
        for k, v in loaded.items():
            raw[k].update(v)
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        parts = key.split(".")
        if parts[0] not in raw or len(parts) < 2:
            raise UsageError(f"--set key must look like data.x, train.x or eval.x, got {key!r}")
        node = raw[parts[0]]
        for p in parts[1:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_value(value)
    if seed is not None:
        raw["data"]["seed"] = seed
        raw["train"]["seed"] = seed
    try:
        return CliConfig(SyntheticConfig.from_dict(raw["data"]), TrainConfig.from_dict(raw["train"]),
                         EvalConfig.from_dict(raw["eval"]))
    except TypeError as e:
        raise UsageError(f"bad config value: {e}") from None
    except InvalidArgumentError as e:
        raise UsageError(str(e)) from None


def artifact_version() -> str:
    """Package version plus a short digest of the installed sources."""
    h = hashlib.sha256()
    root = Path(__file__).parent
    for p in sorted(root.rglob("*.py")):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(p.read_bytes())
    return f"{__version__}+g{h.hexdigest()[:10]}"


# ---------------------------------------------------------------- helpers

def _read_split(data_dir, name):
    path = Path(data_dir) / f"{name}.jsonl"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found (run gen-data first)")
    return read_dataset(path)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def _fmt(v):
    return f"{v:.6f}" if isinstance(v, float) else v


def _encoder(models):
    return load_encoder_model(Path(models) / ENCODER_CKPT)


def _ar(models, variant):
    path = Path(models) / AR_CKPTS[variant]
    if not path.exists():
        raise CheckpointError(f"{path} not found (run train-ar --variant {variant})")
    return load_ar_model(path)


def _forecasts(kind, models, train, test, cfg: CliConfig):
    ec = cfg.eval
    windows = evaluation_windows(test, ec.conditioning, ec.rollout, ec.stride)
    if not windows:
        raise InvalidArgumentError("no test sequence is long enough for an evaluation window")
    args = (test, windows, ec.conditioning, ec.rollout)
    if kind in ("latent", "latent-no-strip"):
        model, ar, _ = _ar(models, kind)
        return forecast_latent(model, ar, *args)
    enc = _encoder(models)
    if kind == "pose":
        _, ar, _ = _ar(models, "pose")
        return forecast_pose_ar(enc, ar, *args)
    if kind == "constant":
        return forecast_constant(enc, *args)
    if kind == "nn":
        db = nn_database_from_samples(train, enc.skel, ec.conditioning, ec.rollout)
        return forecast_nn(enc, db, *args)
    raise InvalidArgumentError(f"unknown model {kind!r}")


# ---------------------------------------------------------------- subcommands

def cmd_gen_data(args, cfg: CliConfig, out: Path):
    corpus = generate_corpus(cfg.data)
    parts = split(corpus, cfg.eval.split_ratios, cfg.eval.split_seed)
    for name, part in zip(("train", "val", "test"), parts):
        write_dataset(out / f"{name}.jsonl", part)
    rows = [(name, len(p), len({s.actor for s in p})) for name, p in zip(("train", "val", "test"), parts)]
    _write_csv(out / "splits.csv", ["split", "sequences", "actors"], rows)
    return {"sequences": len(corpus)}


def cmd_train_encoder(args, cfg: CliConfig, out: Path):
    train = _read_split(args.data, "train")
    val = _read_split(args.data, "val")
    tc = replace(cfg.train, encoder_mode=args.mode) if args.mode else cfg.train
    name = ENCODER_CKPT if tc.encoder_mode == "causal" else f"encoder_{tc.encoder_mode}.ckpt"
    _, res = train_encoder(train, tc, val_samples=val, checkpoint_path=out / name,
                           log_path=out / name.replace(".ckpt", "_curve.csv"))
    return {"initial_loss": res.initial_loss, "final_loss": res.final_loss}


def cmd_train_ar(args, cfg: CliConfig, out: Path):
    train = _read_split(args.data, "train")
    model = load_encoder_model(Path(args.models) / ENCODER_CKPT, cfg.train)
    tc = cfg.train
    if args.variant == "latent-no-strip":
        tc = replace(tc, weights=replace(tc.weights, w_strip=0.0))
    ckpt = out / AR_CKPTS[args.variant]
    curve = ckpt.with_name(ckpt.stem + "_curve.csv")
    if args.variant == "pose":
        _, res = train_pose_autoregressor(train, model, tc, checkpoint_path=ckpt, log_path=curve)
    else:
        _, _, res = train_autoregressor(train, model, tc, checkpoint_path=ckpt, log_path=curve)
    return {"initial_loss": res.initial_loss, "final_loss": res.final_loss}


def cmd_rollout(args, cfg: CliConfig, out: Path):
    test = _read_split(args.data, "test")
    fcs = _forecasts(args.model, args.models, _read_split(args.data, "train") if args.model == "nn" else [],
                     test, cfg)
    rows = []
    for f in fcs:
        for step, joints in enumerate(f.pred_joints):
            for j, p in enumerate(joints):
                rows.append((f.sequence, f.start, f.motif, step, j) + tuple(_fmt(float(c)) for c in p))
    _write_csv(out / f"rollout_{args.model}.csv", ["sequence", "start", "motif", "step", "joint", "x", "y", "z"], rows)
    return {"windows": len(fcs)}


def cmd_evaluate(args, cfg: CliConfig, out: Path):
    test = _read_split(args.data, "test")
    train = _read_split(args.data, "train") if args.model == "nn" else []
    rep = evaluate(_forecasts(args.model, args.models, train, test, cfg), cfg.eval.horizons)
    rep.write(out / f"report_{args.model}.csv", out / f"report_{args.model}.json")
    return {"rows": len(rep.rows)}


def cmd_discover_statues(args, cfg: CliConfig, out: Path):
    test = _read_split(args.data, "test")
    model, ar, _ = _ar(args.models, "latent")
    ec = cfg.eval
    rows, trace = [], []
    for i, s in enumerate(test):
        if args.motif and s.motif != args.motif:
            continue
        res = discover_statues(len(s), window_accuracy_fn(model, ar, s, ec.conditioning, 15), ec.conditioning, 15)
        phase = s.phases[res.frame] if s.phases and res.frame < len(s) else ""
        rows.append((i, s.motif, res.frame, res.window_end, phase))
        for w, a, sm, d in zip(res.windows, res.accuracy, res.smoothed, res.change):
            trace.append((i, s.motif, int(w), _fmt(float(a)), _fmt(float(sm)), _fmt(float(d))))
    _write_csv(out / "statues.csv", ["sequence", "motif", "frame", "window_end", "phase"], rows)
    _write_csv(out / "statue_traces.csv", ["sequence", "motif", "window_end", "accuracy", "smoothed", "change"],
               trace)
    return {"sequences": len(rows)}


def cmd_gradcheck(args, cfg: CliConfig, out: Path):
    dim = cfg.eval.gradcheck_dim
    tc = replace(cfg.train, dim=dim, hidden=2 * dim)
    results = loss_gradchecks(tc, num_coords=cfg.eval.gradcheck_coords, seed=cfg.train.seed)
    _write_csv(out / "gradcheck.csv", ["loss", "max_rel_error"], [(k, f"{v:.3e}") for k, v in results.items()])
    worst = max(results.values())
    for k, v in results.items():
        print(f"{k}: max relative error {v:.3e}")
    if not worst < 1e-4:
        raise RuntimeError(f"gradient check failed: max relative error {worst:.3e} >= 1e-4")
    return {"max_rel_error": worst}


COMPARE_MODELS = (("AR-latent", "latent"), ("AR-latent-no-strip", "latent-no-strip"), ("AR-pose", "pose"),
                  ("Constant", "constant"), ("NN", "nn"))


def cmd_compare_baselines(args, cfg: CliConfig, out: Path):
    train = _read_split(args.data, "train")
    test = _read_split(args.data, "test")
    rows = []
    for label, kind in COMPARE_MODELS:
        rep = evaluate(_forecasts(kind, args.models, train, test, cfg), cfg.eval.horizons)
        for m, h, k, d, v in rep.rows:
            if m == "all":
                rows.append((label, h, k, "dtw" if d else "no-dtw", f"{v:.6f}"))
    _write_csv(out / "compare_baselines.csv", ["model", "horizon", "metric", "dtw", "value"], rows)
    return {"rows": len(rows)}


COMMANDS = {"gen-data": cmd_gen_data, "train-encoder": cmd_train_encoder, "train-ar": cmd_train_ar,
            "rollout": cmd_rollout, "evaluate": cmd_evaluate, "discover-statues": cmd_discover_statues,
            "gradcheck": cmd_gradcheck, "compare-baselines": cmd_compare_baselines}


# ---------------------------------------------------------------- argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with data/train/eval sections")
    common.add_argument("--seed", type=int, help="overrides data.seed and train.seed")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="config override such as train.lr=0.001 (repeatable)")
    common.add_argument("--data", help="directory with train/val/test.jsonl (default: --out)")
    common.add_argument("--models", help="directory with checkpoints (default: --out)")
    p = _Parser(prog="phd", description="Synthetic-video 3D motion prediction toolkit.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("gen-data", parents=[common], help="generate the synthetic corpus and its splits")
    te = sub.add_parser("train-encoder", parents=[common], help="stage 1: temporal encoder + regressor")
    te.add_argument("--mode", choices=("causal", "centered"))
    ta = sub.add_parser("train-ar", parents=[common], help="stage 2: autoregressive predictor")
    ta.add_argument("--variant", choices=tuple(AR_CKPTS), default="latent")
    for name in ("rollout", "evaluate"):
        sp = sub.add_parser(name, parents=[common], help=f"{name} forecasts on the test split")
        sp.add_argument("--model", choices=("latent", "latent-no-strip", "pose", "constant", "nn"), default="latent")
    ds = sub.add_parser("discover-statues", parents=[common], help="find statue frames on test sequences")
    ds.add_argument("--motif")
    sub.add_parser("gradcheck", parents=[common], help="finite-difference check of both training losses")
    sub.add_parser("compare-baselines", parents=[common], help="table of all forecasters at every horizon")
    return p


def _thread_limit():
    value = os.environ.get("PHD_NUM_THREADS")
    if not value:
        return None
    try:
        n = int(value)
    except ValueError:
        raise UsageError(f"PHD_NUM_THREADS must be a positive integer, got {value!r}") from None
    if n < 1:
        raise UsageError(f"PHD_NUM_THREADS must be a positive integer, got {value!r}")
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def run(argv=None) -> int:
    parser = make_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if not argv:
            raise UsageError("missing subcommand")
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        cfg = build_config(args.config, args.set, args.seed)
        limiter = _thread_limit()
    except UsageError as e:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    args.data = args.data or str(out)
    args.models = args.models or str(out)
    handler = logging.FileHandler(out / "run.log", mode="a")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    logging.getLogger().addHandler(handler)
    logging.getLogger().setLevel(logging.INFO)
    try:
        log.info("command %s seed %d config %s train-config %s version %s", args.command, cfg.train.seed,
                 cfg.digest(), config_hash(cfg.train), artifact_version())
        t0 = time.time()
        summary = COMMANDS[args.command](args, cfg, out)
        log.info("done %s in %.1fs: %s", args.command, time.time() - t0, json.dumps(summary, sort_keys=True))
        return 0
    except (ValueError, OSError, RuntimeError) as e:
        log.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return 1
    finally:
        logging.getLogger().removeHandler(handler)
        handler.close()
        if limiter is not None:
            limiter.restore_original_limits()


def main():
    sys.exit(run())
