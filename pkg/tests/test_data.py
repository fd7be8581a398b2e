import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phd.camera import project
from phd.data import (FORMAT_VERSION, MOTIFS, MotionSample, SyntheticConfig, feature_projection, generate_corpus,
                      generate_motion, generate_sample, make_projection, occlusion_mask, read_dataset,
                      sample_from_json, sample_to_json, split, synthesize_features, write_dataset)
from phd.errors import DatasetFormatError, FormatVersionError, InsufficientDataError, InvalidArgumentError
from phd.kinematics import forward_kinematics

GOLDEN = Path(__file__).parent / "golden"
SMALL = SyntheticConfig(sequences_per_motif=3, length_range=(60, 64), num_actors=3, seed=5)


@pytest.fixture(scope="module")
def small_corpus():
    return generate_corpus(SMALL)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        SyntheticConfig(motifs=("moonwalk",))
    with pytest.raises(InvalidArgumentError):
        SyntheticConfig(occlusion_prob=1.5)
    with pytest.raises(InvalidArgumentError):
        SyntheticConfig.from_dict({"sequences": 3})
    assert SyntheticConfig.from_dict({"motifs": ["swing"], "length_range": [50, 60]}).motifs == ("swing",)


@pytest.mark.parametrize("motif", MOTIFS)
def test_motion_deterministic(motif, skel):
    a = generate_motion(motif, 70, np.zeros(4), seed=9, skel=skel)
    b = generate_motion(motif, 70, np.zeros(4), seed=9, skel=skel)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    c = generate_motion(motif, 70, np.zeros(4), seed=10, skel=skel)
    assert not np.array_equal(a[0], c[0])


def test_unknown_motif_rejected(skel):
    with pytest.raises(InvalidArgumentError):
        generate_motion("moonwalk", 50, np.zeros(4))


@pytest.mark.parametrize("motif", ["walk_cycle", "squat_cycle"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cyclic_motifs_repeat_with_period(motif, seed, skel):
    pose, _, info = generate_motion(motif, 90, np.zeros(4), seed=seed, skel=skel)
    p = info["period"]
    assert np.abs(pose[:-p] - pose[p:]).max() < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_windup_strike_pause_is_still(seed, skel):
    pose, _, info = generate_motion("windup_strike", 90, np.zeros(4), seed=seed, skel=skel)
    phases = np.array(info["phases"])
    vel = np.abs(np.diff(pose, axis=0)).max(axis=(1, 2))
    pause = np.flatnonzero(phases == "pause")
    assert len(pause) >= 8
    assert vel[pause[:-1]].max() < 1e-3
    strike = np.flatnonzero(phases == "strike")
    assert vel[strike].max() > 0.05
    assert info["strike_onset"] == strike[0]


def test_features_static_pose_constant():
    kp = np.repeat(np.random.default_rng(0).normal(size=(1, 14, 2)), 10, axis=0)
    feats = synthesize_features(kp, np.ones((10, 14), bool), np.arange(8.0), noise=0.0)
    # first frame has no previous frame; afterwards the difference cue is zero
    assert np.array_equal(feats[1:], np.repeat(feats[1:2], 9, axis=0))


def test_features_deterministic_and_local(rng):
    kp = rng.normal(size=(20, 14, 2))
    vis = rng.random((20, 14)) > 0.1
    emb = rng.normal(size=8)
    a = synthesize_features(kp, vis, emb, noise=0.01, seed=3)
    assert np.array_equal(a, synthesize_features(kp, vis, emb, noise=0.01, seed=3))
    for t in (0, 7, 19):
        pert = kp.copy()
        pert[t] += 0.5
        b = synthesize_features(pert, vis, emb, noise=0.01, seed=3)
        changed = np.flatnonzero(np.abs(a - b).max(axis=1) > 0)
        assert set(changed) <= {t, t + 1}
        assert t in changed


def test_projection_fixture_matches_generator():
    fixture = feature_projection()
    assert fixture.shape == (64, 64)
    np.testing.assert_allclose(fixture, make_projection(), rtol=0, atol=1e-15)


def test_keypoints_reconstructable(small_corpus, skel):
    for s in small_corpus:
        joints = forward_kinematics(s.pose, np.broadcast_to(s.shape, (len(s), 4)), skel)
        assert np.array_equal(joints, s.joints_3d)
        clean = project(joints, s.aux["camera"])
        assert np.array_equal(clean + s.aux["keypoint_noise"], s.keypoints_2d)


def test_corpus_shapes_and_lengths(small_corpus):
    assert len(small_corpus) == 12
    assert [s.motif for s in small_corpus[::3]] == list(MOTIFS)
    for s in small_corpus:
        assert 60 <= len(s) <= 64
        assert s.features.shape == (len(s), 64)
        assert s.visibility.dtype == bool and s.fps == 25
        assert len(s.phases) == len(s)


def test_generation_deterministic():
    cfg = SyntheticConfig(motifs=("swing",), sequences_per_motif=2, length_range=(60, 60), num_actors=2)
    assert generate_corpus(cfg) == generate_corpus(cfg)


def test_sample_independent_of_corpus_position(small_corpus, skel):
    s = small_corpus[4]
    again = generate_sample(s.motif, s.actor, len(s), SMALL, 4, skel)
    assert again == s


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), prob=st.floats(0.0, 1.0))
def test_occlusion_cap(seed, prob):
    vis = occlusion_mask(40, 14, prob, np.random.default_rng(seed))
    assert (~vis).sum(axis=1).max() <= 7


def test_round_trip_bit_exact(tmp_path, small_corpus):
    path = tmp_path / "d.jsonl"
    write_dataset(path, small_corpus)
    back = read_dataset(path)
    assert back == small_corpus
    for a, b in zip(back, small_corpus):
        assert a.features.tobytes() == b.features.tobytes()
    write_dataset(tmp_path / "e.jsonl", [])
    assert read_dataset(tmp_path / "e.jsonl") == []


def test_round_trip_without_3d(tmp_path, rng):
    s = MotionSample("swing", 3, rng.normal(size=(4, 64)), rng.normal(size=(4, 14, 2)), np.ones((4, 14), bool))
    assert sample_from_json(sample_to_json(s)) == s


def test_malformed_lines_report_line_numbers(tmp_path, small_corpus):
    good = sample_to_json(small_corpus[0])
    path = tmp_path / "bad.jsonl"
    path.write_text(good + "\n{not json\n")
    with pytest.raises(DatasetFormatError) as e:
        read_dataset(path)
    assert e.value.line == 2
    doc = json.loads(good)
    doc["visibility"][0][0] = 1
    path.write_text(good + "\n" + good + "\n" + json.dumps(doc) + "\n")
    with pytest.raises(DatasetFormatError) as e:
        read_dataset(path)
    assert e.value.line == 3
    doc = json.loads(good)
    doc["colour"] = "red"
    with pytest.raises(DatasetFormatError):
        sample_from_json(json.dumps(doc), 1)
    doc = json.loads(good)
    del doc["format_version"]
    with pytest.raises(DatasetFormatError):
        sample_from_json(json.dumps(doc), 1)
    doc = json.loads(good)
    doc["features"] = doc["features"][:-1]
    with pytest.raises(DatasetFormatError):
        sample_from_json(json.dumps(doc), 1)


def test_version_mismatch(small_corpus):
    doc = json.loads(sample_to_json(small_corpus[0]))
    doc["format_version"] = FORMAT_VERSION + 1
    with pytest.raises(FormatVersionError):
        sample_from_json(json.dumps(doc), 1)


def test_corpus_golden_hash(tmp_path, small_corpus):
    path = tmp_path / "c.jsonl"
    write_dataset(path, small_corpus)
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    assert digest == (GOLDEN / "corpus_small.sha256").read_text().strip()


def _actor_samples(n_actors):
    return [MotionSample("swing", a, np.zeros((1, 1)), np.zeros((1, 14, 2)), np.ones((1, 14), bool))
            for a in range(n_actors) for _ in range(2)]


def test_split_counts_and_disjoint():
    tr, va, te = split(_actor_samples(10), (0.6, 0.2, 0.2), seed=0)
    sets = [{s.actor for s in part} for part in (tr, va, te)]
    assert [len(x) for x in sets] == [6, 2, 2]
    assert not (sets[0] & sets[1]) and not (sets[0] & sets[2]) and not (sets[1] & sets[2])
    assert sum(len(p) for p in (tr, va, te)) == 20


def test_split_deterministic_and_golden():
    parts = split(_actor_samples(10), seed=0)
    again = split(_actor_samples(10), seed=0)
    assert [[s.actor for s in p] for p in parts] == [[s.actor for s in p] for p in again]
    pinned = json.loads((GOLDEN / "split_10_actors.json").read_text())
    assert [sorted({s.actor for s in p}) for p in parts] == pinned


def test_split_errors():
    with pytest.raises(InvalidArgumentError):
        split(_actor_samples(10), (0.5, 0.2, 0.2))
    with pytest.raises(InsufficientDataError):
        split(_actor_samples(2))


def test_training_lengths_cover_window():
    corpus_cfg = SyntheticConfig()
    assert corpus_cfg.length_range[0] >= 15 + 25
