"""Finding the frame a forecaster needed to see.

Slide a conditioning window along a sequence, score the prediction that
follows each window, smooth the profile and take the largest rise. A stubbed
profile with one planted step shows the mechanics; the second half runs a
briefly trained model on windup_strike sequences and reports the phase of each
discovered frame.
"""
import numpy as np

from phd.data import SyntheticConfig, generate_corpus, split
from phd.evaluation import discover_statues
from phd.evaluation.forecast import window_accuracy_fn
from phd.trainer import TrainConfig, train_autoregressor, train_encoder

w_star = 33
res = discover_statues(80, lambda w: np.where(np.asarray(w) <= w_star, 30.0, 85.0))
print(f"planted step after window {w_star}: discovered frame {res.frame} (window end {res.window_end})")
print("smoothed profile around it:", np.round(res.smoothed[w_star - 16:w_star - 10], 1))

corpus = generate_corpus(SyntheticConfig(sequences_per_motif=10, num_actors=12, seed=4))
train, val, test = split(corpus, seed=0)
cfg = TrainConfig(dim=32, hidden=64, lr=1e-3, encoder_epochs=10, ar_epochs=4, windows_per_epoch=48)
model, _ = train_encoder(train, cfg)
model, ar, _ = train_autoregressor(train, model, cfg)
for s in (x for x in test if x.motif == "windup_strike"):
    res = discover_statues(len(s), window_accuracy_fn(model, ar, s))
    onset = s.phases.index("strike")
    print(f"sequence of {len(s)} frames: frame {res.frame} ({s.phases[res.frame]}), strike starts at {onset}")
