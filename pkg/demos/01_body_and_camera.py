"""Body model and camera walkthrough.

Pose a 14-joint skeleton, project it with a weak-perspective camera, then
recover the camera from noisy, partly hidden keypoints.
"""
import numpy as np

from phd.camera import WeakPerspectiveCamera, camera_objective, fit_camera, project
from phd.kinematics import bone_lengths, forward_kinematics, load_skeleton, rodrigues

skel = load_skeleton()
print("joints:", skel.num_joints, "shape coefficients:", skel.num_betas)

# --- axis-angle rotations
R = rodrigues(np.array([0.0, 0.0, np.pi / 2]))
print("quarter turn about z maps x to", np.round(R @ [1.0, 0.0, 0.0], 12))

# --- forward kinematics: bend both knees, raise the right shoulder
rng = np.random.default_rng(0)
pose = np.zeros((skel.num_joints, 3))
pose[[3, 6], 0] = 0.8
pose[11, 2] = -1.0
beta = np.array([0.5, -0.3, 0.0, 0.2])
joints = forward_kinematics(pose, beta, skel)
print("root-relative joints (m):\n", np.round(joints, 3))
# shape changes bone lengths, pose never does
print("bone lengths equal across poses:",
      np.allclose(bone_lengths(joints, skel), bone_lengths(forward_kinematics(np.zeros_like(pose), beta, skel), skel)))

# --- weak-perspective projection and the closed-form camera fit
cam = WeakPerspectiveCamera(1.3, np.array([0.1, -0.05]))
kp = project(joints, cam) + rng.normal(scale=0.005, size=(skel.num_joints, 2))
vis = rng.random(skel.num_joints) > 0.2
fit = fit_camera(joints[:, :2], kp, vis)
print("true camera", cam.s, cam.t, "fitted", round(fit.s, 4), np.round(fit.t, 4))
print("objective at fit", camera_objective(fit, joints[:, :2], kp, vis))
worse = min(camera_objective(fit.as_array() + d, joints[:, :2], kp, vis) for d in rng.normal(scale=0.02, size=(100, 3)))
print("best of 100 perturbed cameras", worse)
