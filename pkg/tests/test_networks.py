import numpy as np
import pytest

from oracles import ar_loop, encoder_loop, regressor_loop
from phd.autoregressor import Autoregressor, RolloutConfig
from phd.body import PoseLayout
from phd.errors import InvalidArgumentError
from phd.nn import snapshot
from phd.temporal_encoder import PoseRegressor, TemporalEncoder

F, D, G = 8, 16, 4


def small_encoder(seed=0, mode="causal"):
    return TemporalEncoder(F, D, mode, groups=G, rng=np.random.default_rng(seed))


def randomize_affine(params, rng):
    # non-trivial norm affines so the oracle comparison covers them
    for name, t in params.items():
        if name.endswith(("gamma", "beta")) or name.endswith(".b"):
            t.data = rng.normal(size=t.data.shape) * 0.3 + (1.0 if name.endswith("gamma") else 0.0)


# ---------------------------------------------------------------- encoder

@pytest.mark.parametrize("mode", ["causal", "centered"])
def test_encoder_matches_straight_line_oracle(mode, rng):
    enc = small_encoder(1, mode)
    randomize_affine(enc.params, rng)
    x = rng.normal(size=(21, F))
    ref = encoder_loop(x, snapshot(enc.params), G, "edge_causal" if mode == "causal" else "edge_centered")
    np.testing.assert_allclose(enc.encode(x), ref, rtol=0, atol=1e-12)


def test_encoder_constant_input_gives_identical_strips(rng):
    enc = small_encoder(2)
    x = np.repeat(rng.normal(size=(1, F)), 30, axis=0)
    out = enc.encode(x)
    assert np.array_equal(out, np.repeat(out[:1], 30, axis=0))


def test_encoder_causality_bit_exact(rng):
    enc = small_encoder(3)
    x = rng.normal(size=(40, F))
    base = enc.encode(x)
    for t in (0, 7, 25, 38):
        y = x.copy()
        y[t + 1:] += rng.normal(size=y[t + 1:].shape) * 10
        assert np.array_equal(enc.encode(y)[:t + 1], base[:t + 1])


def test_encoder_impulse_response_spans_13_frames(rng):
    enc = TemporalEncoder(F, D, "causal", groups=G, rng=np.random.default_rng(11))
    x = np.zeros((45, F))
    y = x.copy()
    y[20] = 1.0
    diff = np.abs(enc.encode(y) - enc.encode(x)).max(axis=1)
    assert np.all(diff[:20] == 0)
    assert np.all(diff[20:33] > 1e-12)
    assert np.all(diff[33:] == 0)


def test_encoder_receptive_field_exact_over_seeds():
    t = 30
    hits = 0
    for seed in range(100):
        enc = small_encoder(seed)
        r = np.random.default_rng(seed)
        x = r.normal(size=(t + 1, F))
        base = enc.encode(x)[t]
        far = x.copy()
        far[t - 13] += 1.0
        assert np.array_equal(enc.encode(far)[t], base)
        near = x.copy()
        near[t - 12] += 1.0
        if np.abs(enc.encode(near)[t] - base).max() > 1e-12:
            hits += 1
    assert hits >= 99


def test_centered_encoder_window(rng):
    enc = small_encoder(4, "centered")
    x = rng.normal(size=(40, F))
    base = enc.encode(x)
    y = x.copy()
    y[20] += 1.0
    diff = np.abs(enc.encode(y) - base).max(axis=1)
    assert np.all(diff[:14] == 0) and np.all(diff[27:] == 0)
    assert np.all(diff[14:27] > 0)


def test_encoder_rejects_bad_dimensions():
    enc = small_encoder()
    with pytest.raises(InvalidArgumentError):
        enc.encode(np.zeros((5, F + 1)))
    with pytest.raises(InvalidArgumentError):
        TemporalEncoder(F, D, "bidirectional")


def test_receptive_field_constant():
    assert TemporalEncoder().receptive_field == 13
    assert Autoregressor(8, 16, groups=4).receptive_field == 13


# ---------------------------------------------------------------- regressor

def test_regressor_zero_layers_give_mean_state(skel, rng):
    layout = PoseLayout(skel.num_joints, skel.num_betas)
    reg = PoseRegressor(layout, D, 32, rng=rng)
    for name in ("fc1", "fc2"):
        reg.params[f"regressor.{name}.w"].data[:] = 0
        reg.params[f"regressor.{name}.b"].data[:] = 0
    out = reg.regress(rng.normal(size=(5, D)))
    assert np.array_equal(out, np.broadcast_to(layout.mean_state(), out.shape))
    assert layout.mean_state()[layout.pose_dim] == 1.0


def test_regressor_matches_scalar_oracle(skel, rng):
    layout = PoseLayout(skel.num_joints, skel.num_betas)
    reg = PoseRegressor(layout, D, 32, rng=rng, output_gain=1.0)
    reg.params["regressor.mean"].data = rng.normal(size=layout.state_dim)
    strips = rng.normal(size=(4, D))
    got = reg.regress(strips)
    p = snapshot(reg.params)
    for i in range(4):
        np.testing.assert_allclose(got[i], regressor_loop(strips[i], p), rtol=0, atol=1e-12)


def test_regressor_deterministic_and_offsets(skel, rng):
    layout = PoseLayout(skel.num_joints, skel.num_betas)
    reg = PoseRegressor(layout, D, 32, rng=rng, output_gain=1.0)
    s = rng.normal(size=(3, D))
    assert np.array_equal(reg.regress(s), reg.regress(s.copy()))
    # identity offset maps at initialisation
    assert np.array_equal(reg.regress_offset(s, -10), reg.regress(s))
    for dt in (-10, -5):
        reg.params[f"regressor.offset_m{-dt}.w"].data = rng.normal(size=(D, D))
    assert not np.allclose(reg.regress_offset(s, -10), reg.regress_offset(s, -5))
    with pytest.raises(InvalidArgumentError):
        reg.regress_offset(s, -3)


def test_zero_strip_zero_offset_map_gives_mean(skel, rng):
    layout = PoseLayout(skel.num_joints, skel.num_betas)
    reg = PoseRegressor(layout, D, 32, rng=rng)
    for name in ("fc1", "fc2"):
        reg.params[f"regressor.{name}.w"].data[:] = 0
    reg.params["regressor.offset_m5.w"].data[:] = 0
    out = reg.regress_offset(np.zeros((2, D)), -5)
    assert np.array_equal(out, np.broadcast_to(layout.mean_state(), out.shape))


# ---------------------------------------------------------------- autoregressor

def small_ar(seed=0, io=D, variant="latent"):
    return Autoregressor(io, D, variant, groups=G, rng=np.random.default_rng(seed))


def test_ar_matches_scalar_oracle(rng):
    ar = small_ar(1)
    randomize_affine(ar.params, rng)
    hist = rng.normal(size=(13, D))
    np.testing.assert_allclose(ar.predict_next(hist), ar_loop(hist, snapshot(ar.params), G), rtol=0, atol=1e-12)


def test_ar_zero_head_returns_last_input(rng):
    ar = small_ar(2)
    ar.params["ar.head.w"].data[:] = 0
    ar.params["ar.head.b"].data[:] = 0
    hist = rng.normal(size=(9, D))
    out = ar.predict_next(hist)
    np.testing.assert_allclose(out, ar_loop(hist, snapshot(ar.params), G), rtol=0, atol=1e-12)
    assert np.array_equal(out, hist[-1])


def test_ar_short_history_equals_explicit_padding(rng):
    ar = small_ar(3)
    hist = rng.normal(size=(5, D))
    padded = np.concatenate([np.repeat(hist[:1], 8, axis=0), hist])
    assert np.array_equal(ar.predict_next(hist), ar.predict_next(padded))
    assert np.array_equal(ar.predict_next(hist), ar.predict_next(hist.copy()))


def test_ar_long_history_uses_last_13(rng):
    ar = small_ar(4)
    hist = rng.normal(size=(20, D))
    other = hist.copy()
    other[:7] = rng.normal(size=(7, D))
    assert np.array_equal(ar.predict_next(hist), ar.predict_next(other))


def test_rollout_is_iterated_predict_next(rng):
    ar = small_ar(5)
    cond = rng.normal(size=(15, D))
    out = ar.rollout(cond, RolloutConfig(15, 20))
    seq = list(cond)
    for k in range(20):
        nxt = ar.predict_next(np.array(seq[-13:]))
        assert np.array_equal(out[k], nxt)
        seq.append(nxt)
    assert np.array_equal(ar.rollout(cond, 20), out)


def test_rollout_horizon_zero_and_errors(rng):
    ar = small_ar(6)
    cond = rng.normal(size=(15, D))
    assert ar.rollout(cond, 0).shape == (0, D)
    with pytest.raises(InvalidArgumentError):
        ar.rollout(cond, -1)
    with pytest.raises(InvalidArgumentError):
        RolloutConfig(0, 5)


def test_rollout_window_bookkeeping(rng):
    """Conditioning element c influences prediction k only while it is inside the
    13-element window, i.e. when ``len(cond) - c + k <= 13`` (directly or via
    earlier predictions, which carry its influence forward)."""
    ar = small_ar(7)
    cond = rng.normal(size=(15, D))
    base = ar.rollout(cond, 20)
    # the oldest two conditioning elements are outside every window
    for c in (0, 1):
        pert = cond.copy()
        pert[c] += 5.0
        assert np.array_equal(ar.rollout(pert, 20), base)
    # element 2 is in the first window only; it changes step 0 and, through it, later steps
    pert = cond.copy()
    pert[2] += 5.0
    out = ar.rollout(pert, 20)
    assert np.abs(out[0] - base[0]).max() > 0
    # the last conditioning element is read directly by steps 0..12
    pert = cond.copy()
    pert[14] += 5.0
    assert np.abs(ar.rollout(pert, 20)[12] - base[12]).max() > 0


def test_rollout_batched_matches_single(rng):
    ar = small_ar(8)
    cond = rng.normal(size=(3, 15, D))
    batched = ar.rollout(cond, 6)
    for i in range(3):
        np.testing.assert_allclose(batched[i], ar.rollout(cond[i], 6), rtol=0, atol=1e-13)


def test_ar_causal_sequence(rng):
    ar = small_ar(9)
    x = rng.normal(size=(1, 30, D))
    base = ar.sequence(x).data
    y = x.copy()
    y[:, 20:] += 1.0
    assert np.array_equal(ar.sequence(y).data[:, :20], base[:, :20])


def test_latent_rollout_readout_finite(skel):
    layout = PoseLayout(skel.num_joints, skel.num_betas)
    for seed in range(5):
        r = np.random.default_rng(seed)
        ar = Autoregressor(D, D, groups=G, rng=r)
        reg = PoseRegressor(layout, D, 32, rng=r)
        poses = reg.regress(ar.rollout(r.normal(size=(15, D)), 30))
        assert np.all(np.isfinite(poses))


def test_pose_variant_layout_round_trip(skel, rng):
    layout = PoseLayout(skel.num_joints, skel.num_betas)
    ar = small_ar(10, io=layout.pose_dim, variant="pose")
    theta = rng.normal(size=(15, skel.num_joints, 3)) * 0.2
    beta = rng.normal(size=(15, skel.num_betas))
    vec = layout.join_pose(theta, beta)
    assert vec.shape == (15, layout.pose_dim)
    t2, b2 = layout.split_pose(vec)
    assert np.array_equal(t2, theta) and np.array_equal(b2, beta)
    out = ar.rollout(vec, 4)
    assert out.shape == (4, layout.pose_dim)
    with pytest.raises(InvalidArgumentError):
        Autoregressor(4, 8, "spline")
