"""Two-stage training on a small corpus and a forecast comparison.

Stage 1 fits the causal temporal encoder and pose regressor; stage 2 trains
the autoregressor on movie strips with the scheduled-sampling curriculum. The
settings here are tiny so the script finishes in about two minutes. At this
size the encoder is still coarse and the latent forecasts only keep pace with
the Constant baseline; configs/acceptance.json is the full-size run that
separates them.
"""
import time

from phd.data import SyntheticConfig, generate_corpus, split
from phd.evaluation import evaluate
from phd.evaluation.forecast import (evaluation_windows, forecast_constant, forecast_latent, forecast_nn,
                                     forecast_pose_ar, frame_reconstruction, nn_database_from_samples)
from phd.trainer import TrainConfig, curriculum_steps, train_autoregressor, train_encoder, train_pose_autoregressor

corpus = generate_corpus(SyntheticConfig(sequences_per_motif=24, num_actors=24, seed=2))
train, val, test = split(corpus, seed=0)
cfg = TrainConfig(dim=32, hidden=64, lr=1e-3, encoder_epochs=30, ar_epochs=20, windows_per_epoch=96,
                  finetune_encoder=False)
print("curriculum:", [curriculum_steps(e, cfg) for e in range(cfg.ar_epochs)])

t = time.time()
model, res = train_encoder(train, cfg, val_samples=val)
print(f"stage 1: loss {res.initial_loss:.3f} -> {res.final_loss:.3f} ({time.time() - t:.0f}s)")
print(f"per-frame error on test {frame_reconstruction(model, test):.1f} mm")

baseline_model = train_encoder(train, cfg)[0]          # untouched copy for the pose-space models
t = time.time()
model, ar, res = train_autoregressor(train, model, cfg)
# the loss climbs because each epoch feeds the model more of its own predictions
print(f"stage 2: loss {res.initial_loss:.3f} -> {res.final_loss:.3f} ({time.time() - t:.0f}s)")
pose_ar, _ = train_pose_autoregressor(train, baseline_model, cfg)

windows = evaluation_windows(test)
horizons = (1, 10, 20, 30)
forecasts = {
    "AR-latent": forecast_latent(model, ar, test, windows),
    "AR-pose": forecast_pose_ar(baseline_model, pose_ar, test, windows),
    "Constant": forecast_constant(baseline_model, test, windows),
    "NN": forecast_nn(baseline_model, nn_database_from_samples(train, model.skel), test, windows),
}
print(f"\n{len(windows)} test windows, Procrustes-aligned error (mm) with DTW")
print("model        " + "".join(f"h={h:<6d}" for h in horizons))
for name, fc in forecasts.items():
    rep = evaluate(fc, horizons)
    print(f"{name:12s} " + "".join(f"{rep.value('all', h, 'reconstruction_mm', True):<8.1f}" for h in horizons))
