"""The synthetic video stand-in: four motion motifs, per-frame features and
actor-disjoint splits."""
import numpy as np

from phd.data import MOTIFS, SyntheticConfig, generate_corpus, split

cfg = SyntheticConfig(sequences_per_motif=10, num_actors=10, seed=1)
corpus = generate_corpus(cfg)
print(len(corpus), "sequences over", len({s.actor for s in corpus}), "actors")

for motif in MOTIFS:
    s = next(x for x in corpus if x.motif == motif)
    speed = np.abs(np.diff(s.joints_3d, axis=0)).max(axis=(1, 2))
    print(f"{motif:14s} {len(s)} frames, features {s.features.shape}, mean joint speed {1000 * speed.mean():.1f} mm/frame")
    if s.phases and "strike" in s.phases:
        # acyclic programs carry phase labels; the pause is nearly still
        labels = np.array(s.phases)
        for ph in ("pause", "windup", "hold", "strike", "follow"):
            idx = np.flatnonzero(labels == ph)
            if len(idx):
                print(f"    {ph:7s} frames {idx[0]:2d}..{idx[-1]:2d}  speed {1000 * speed[idx[:-1]].mean() if len(idx) > 1 else 0:.2f}")

# hidden keypoints per frame never exceed half the skeleton
hidden = np.concatenate([(~s.visibility).sum(axis=1) for s in corpus])
print("most hidden joints in one frame:", hidden.max())

train, val, test = split(corpus, (0.6, 0.2, 0.2), seed=0)
for name, part in (("train", train), ("val", val), ("test", test)):
    print(name, len(part), "sequences, actors", sorted({s.actor for s in part}))
