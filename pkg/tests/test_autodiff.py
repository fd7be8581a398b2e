import math

import numpy as np
import pytest

from phd import body
from phd.autodiff import (AdamState, Tensor, adam_step, backward, concat, concat_features,
                          conv1d_edge, group_norm, l2, linear, masked_mse, mse, no_grad, norm,
                          relu, rodrigues, slice_time, sqrt, square, stack, tsum)
from phd.autodiff.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from phd.autodiff.gradcheck import gradcheck
from phd.errors import CheckpointError, InvalidArgumentError
from phd.kinematics import forward_kinematics, rodrigues as np_rodrigues


def _check(build, shapes, rng, coords=60, positive=()):
    params = {}
    for i, shape in enumerate(shapes):
        data = rng.normal(size=shape)
        if i in positive:
            data = np.abs(data) + 0.5
        params[f"p{i}"] = Tensor(data)
    worst, _ = gradcheck(lambda: build(*[params[f"p{i}"] for i in range(len(shapes))]), params,
                         num_coords=coords, seed=int(rng.integers(1 << 30)))
    assert worst < 1e-4


OPS = {
    "add": (lambda a, b: tsum(square(a + b)), [(3, 4), (4,)]),
    "sub": (lambda a, b: tsum(square(a - b)), [(3, 1), (3, 4)]),
    "mul": (lambda a, b: tsum(a * b * a), [(2, 3), (2, 3)]),
    "div": (lambda a, b: tsum(a / b), [(3,), (3,)]),
    "sqrt": (lambda a: tsum(sqrt(a)), [(5,)]),
    "relu": (lambda a: tsum(square(relu(a))), [(6, 3)]),
    "norm": (lambda a: tsum(norm(a, axis=-1)), [(4, 3)]),
    "matmul": (lambda a, b: tsum(square(a @ b)), [(2, 3, 4), (4, 2)]),
    "getitem": (lambda a: tsum(square(a[:, 1:3])) + tsum(a[np.array([0, 0, 1])]), [(3, 4)]),
    "concat_stack": (lambda a, b: tsum(square(concat([a, b], 1))) + tsum(stack([a, a], 0) * 2.0), [(2, 3), (2, 2)]),
    "reshape_transpose": (lambda a: tsum(square(a.reshape(3, 4).transpose(1, 0) @ np.ones((3, 2)))), [(12,)]),
    "mean": (lambda a: square(a.mean(axis=1)).sum(), [(3, 5)]),
    "linear": (lambda x, w, b: tsum(square(linear(x, w, b))), [(2, 5, 4), (4, 3), (3,)]),
    "conv_causal": (lambda x, w, b: tsum(square(conv1d_edge(x, w, b, "edge_causal"))), [(2, 7, 3), (3, 3, 4), (4,)]),
    "conv_centered": (lambda x, w, b: tsum(square(conv1d_edge(x, w, b, "edge_centered"))), [(2, 6, 3), (3, 3, 2), (2,)]),
    "group_norm": (lambda x, g, b: tsum(square(group_norm(x, 2, g, b)) * np.arange(8.0)), [(3, 4, 8), (8,), (8,)]),
    "slice_concat_features": (lambda x, y: tsum(square(slice_time(concat_features(x, y), 1, 3))), [(2, 4, 3), (2, 4, 2)]),
    "mse": (lambda x, y: mse(x, y), [(4, 3), (4, 3)]),
    "masked_mse": (lambda x, y: masked_mse(x, y, np.array([[1.0], [0.0], [1.0], [1.0]])), [(4, 3), (4, 3)]),
    "l2": (lambda x: l2(x), [(5,)]),
    "rodrigues": (lambda a: tsum(rodrigues(a) * np.arange(9.0).reshape(3, 3)), [(6, 3)]),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_finite_differences(name, rng):
    build, shapes = OPS[name]
    _check(build, shapes, rng, positive=(1,) if name == "div" else (0,) if name == "sqrt" else ())


def test_rodrigues_gradient_near_zero(rng):
    for scale in (1e-3, 1e-5):
        p = {"aa": Tensor(rng.normal(size=(4, 3)) * scale)}
        weights = rng.normal(size=(3, 3))
        worst, _ = gradcheck(lambda: tsum(rodrigues(p["aa"]) * weights), p, num_coords=12, h=1e-7)
        assert worst < 1e-4


def test_rodrigues_tensor_matches_numpy(rng):
    aa = rng.uniform(-3, 3, size=(50, 3))
    aa[0] = 0.0
    aa[1] = [1e-9, 0, 0]
    np.testing.assert_allclose(rodrigues(aa).data, np_rodrigues(aa), atol=1e-14)


def test_tensor_fk_matches_numpy(skel, rng):
    pose = rng.uniform(-1.5, 1.5, size=(8, skel.num_joints, 3))
    beta = rng.normal(size=(8, skel.num_betas))
    np.testing.assert_allclose(body.forward_kinematics(pose, beta, skel).data,
                               forward_kinematics(pose, beta, skel), atol=1e-13)


def test_tensor_fk_gradient(skel, rng):
    p = {"pose": Tensor(rng.uniform(-1, 1, size=(3, skel.num_joints, 3))),
         "beta": Tensor(rng.normal(size=(3, skel.num_betas)))}
    w = rng.normal(size=(3, skel.num_joints, 3))
    worst, _ = gradcheck(lambda: tsum(body.forward_kinematics(p["pose"], p["beta"], skel) * w), p, num_coords=80)
    assert worst < 1e-4


def test_tensor_camera_fit_matches_numpy_and_gradient(rng):
    from phd.camera import fit_camera_batch
    x = rng.normal(size=(5, 14, 2))
    y = 1.2 * x + 0.1 * rng.normal(size=(5, 14, 2))
    vis = rng.random((5, 14)) > 0.3
    cam, fitted = body.fit_camera(x, y, vis)
    np.testing.assert_allclose(cam.data, fit_camera_batch(x, y, vis), rtol=1e-10, atol=1e-12)
    p = {"x": Tensor(x)}
    worst, _ = gradcheck(lambda: masked_mse(body.fit_camera(p["x"], y, vis)[1], y, vis[..., None]), p, num_coords=80)
    assert worst < 1e-4


def test_conv_identity_tap(rng):
    x = rng.normal(size=(2, 9, 4))
    w = np.zeros((3, 4, 4))
    w[1] = np.eye(4)
    # the tap that reads frame t sits at index k-1 for causal, the centre for centered
    wc = np.zeros((3, 4, 4))
    wc[2] = np.eye(4)
    np.testing.assert_array_equal(conv1d_edge(x, wc, None, "edge_causal").data, x)
    np.testing.assert_array_equal(conv1d_edge(x, w, None, "edge_centered").data, x)


def test_conv_causal_ignores_future(rng):
    x = rng.normal(size=(1, 12, 3))
    w = rng.normal(size=(3, 3, 3))
    base = conv1d_edge(x, w, None, "edge_causal").data
    for t in range(11):
        pert = x.copy()
        pert[:, t + 1:] += rng.normal(size=pert[:, t + 1:].shape)
        out = conv1d_edge(pert, w, None, "edge_causal").data
        assert np.array_equal(out[:, :t + 1], base[:, :t + 1])


def test_conv_edge_padding_replicates_first_frame(rng):
    x = rng.normal(size=(1, 5, 2))
    w = rng.normal(size=(3, 2, 2))
    out = conv1d_edge(x, w, None, "edge_causal").data
    expected0 = x[0, 0] @ w[0] + x[0, 0] @ w[1] + x[0, 0] @ w[2]
    np.testing.assert_allclose(out[0, 0], expected0, atol=1e-14)


def test_conv_errors(rng):
    with pytest.raises(InvalidArgumentError):
        conv1d_edge(np.zeros((1, 4, 3)), np.zeros((3, 2, 2)))
    with pytest.raises(InvalidArgumentError):
        conv1d_edge(np.zeros((1, 4, 2)), np.zeros((3, 2, 2)), None, "zero")


def test_group_norm_statistics(rng):
    x = rng.normal(loc=3.0, scale=5.0, size=(4, 7, 32))
    y = group_norm(x, 8, eps=1e-5).data.reshape(4, 7, 8, 4)
    assert np.max(np.abs(y.mean(-1))) < 1e-10
    raw_var = x.reshape(4, 7, 8, 4).var(-1)
    np.testing.assert_allclose(y.var(-1), raw_var / (raw_var + 1e-5), atol=1e-12)
    exact = group_norm(x, 8, eps=0.0).data.reshape(4, 7, 8, 4)
    assert np.max(np.abs(exact.var(-1) - 1.0)) < 1e-8


def test_group_norm_never_mixes_time(rng):
    x = rng.normal(size=(1, 5, 8))
    base = group_norm(x, 2).data
    x2 = x.copy()
    x2[0, 3] *= 10
    out = group_norm(x2, 2).data
    assert np.array_equal(np.delete(out, 3, axis=1), np.delete(base, 3, axis=1))


def test_backward_l2_and_unreachable(rng):
    p = Tensor(rng.normal(size=(3, 2)))
    q = Tensor(rng.normal(size=2))
    grads = backward(l2(p), {"p": p, "q": q})
    np.testing.assert_allclose(grads["p"], 2 * p.data)
    assert np.array_equal(grads["q"], np.zeros(2))


def test_backward_constant_loss_zero_grad(rng):
    p = Tensor(rng.normal(size=3))
    loss = tsum(p * 0.0) + 5.0
    assert np.array_equal(backward(loss, {"p": p})["p"], np.zeros(3))


def test_backward_rejects_non_scalar():
    with pytest.raises(InvalidArgumentError):
        backward(Tensor(np.ones(3)) * 2.0, {})


def test_shared_subexpression_accumulates():
    p = Tensor(np.array([1.5]))
    y = p * p
    loss = tsum(y + y * 3.0)
    assert backward(loss, {"p": p})["p"][0] == pytest.approx(4 * 2 * 1.5)


def test_no_grad_records_nothing():
    p = Tensor(np.ones(2))
    with no_grad():
        y = p * 2.0
    assert y.parents == ()


def test_masked_mse_no_visible():
    x = Tensor(np.ones((3, 2)))
    assert float(masked_mse(x, np.zeros((3, 2)), np.zeros((3, 1))).data) == 0.0


def test_adam_zero_gradient_keeps_params():
    p = {"w": Tensor(np.array([1.0, -2.0]))}
    state = AdamState(lr=0.1)
    adam_step(p, {"w": np.zeros(2)}, state)
    assert np.array_equal(p["w"].data, [1.0, -2.0])


def test_adam_first_step_hand_computation():
    p = {"w": Tensor(np.array([0.0]))}
    state = AdamState(lr=0.1)
    adam_step(p, {"w": np.array([1.0])}, state)
    # m_hat = g, v_hat = g^2 after bias correction
    assert p["w"].data[0] == pytest.approx(-0.1 * 1.0 / (math.sqrt(1.0) + 1e-8), abs=1e-15)


def test_adam_deterministic(rng):
    g = rng.normal(size=4)
    outs = []
    for _ in range(2):
        p = {"w": Tensor(np.arange(4.0))}
        state = AdamState(lr=0.01)
        for _ in range(3):
            adam_step(p, {"w": g}, state)
        outs.append(p["w"].data.copy())
    assert np.array_equal(outs[0], outs[1])


def test_adam_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        adam_step({"w": Tensor(np.zeros(2))}, {"w": np.zeros(3)}, AdamState())


def test_checkpoint_round_trip(tmp_path, rng):
    tensors = {"encoder.a": rng.normal(size=(3, 4)), "ar.b": rng.normal(size=5), "s": np.array(2.5)}
    path = tmp_path / "ck.bin"
    save_checkpoint(path, tensors, {"seed": 3})
    loaded, meta = load_checkpoint(path)
    assert meta == {"seed": 3}
    for k, v in tensors.items():
        assert loaded[k].shape == v.shape and np.array_equal(loaded[k], v)
    assert encode_checkpoint(tensors, {"seed": 3}) == path.read_bytes()


def test_checkpoint_layout_is_json_line_plus_le_float64(rng):
    import json
    blob = encode_checkpoint({"x": np.array([1.0, -2.0])})
    head, payload = blob.split(b"\n", 1)
    header = json.loads(head)
    assert header["format_version"] == 1
    assert header["tensors"] == [{"name": "x", "offset": 0, "shape": [2]}]
    assert payload == np.array([1.0, -2.0], dtype="<f8").tobytes()


def test_checkpoint_rejects_bad_version():
    blob = b'{"format_version": 99, "tensors": []}\n'
    with pytest.raises(CheckpointError):
        decode_checkpoint(blob)
