"""Procedural motion-clip generation.

Clips are built from analytic joint/root trajectories, with keypoints from
forward kinematics and velocities from central finite differences, so every
generated clip is kinematically self-consistent.
"""

from dataclasses import dataclass, field

import numpy as np

from ..geometry import quat_from_rpy, rot_z
from ..sim.fk import keypoint_world
from .clip import MotionClip, _central_diff, _ang_vel_from_quats

KINDS = ("stand", "walk", "squat", "arm_wave", "turn", "run")


@dataclass
class SynthParams:
    model: object
    duration: float = 4.0      # s, (0, 60]
    fps: float = 50.0
    stride: float = 0.4        # m, [0, 0.8]
    freq: float = 1.0          # Hz, (0, 3]
    amplitude: float = 0.5     # rad, [0, 1.2]
    turn_rate: float = 0.5     # rad/s, [-1.5, 1.5]
    jitter: float = 0.1        # relative amplitude jitter drawn from the seed


def _check(params):
    p = params
    if not (0 < p.duration <= 60):
        raise ValueError("duration out of range (0, 60]")
    if not (0 <= p.stride <= 0.8):
        raise ValueError("stride out of range [0, 0.8]")
    if not (0 < p.freq <= 3):
        raise ValueError("freq out of range (0, 3]")
    if not (0 <= p.amplitude <= 1.2):
        raise ValueError("amplitude out of range [0, 1.2]")
    if not (-1.5 <= p.turn_rate <= 1.5):
        raise ValueError("turn_rate out of range [-1.5, 1.5]")


def synth_clip(kind, params: SynthParams, seed=0) -> MotionClip:
    """Generate a clip of the given kind; deterministic for a fixed seed."""
    if kind not in KINDS:
        raise ValueError(f"unknown clip kind {kind!r}")
    _check(params)
    model = params.model
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    amp_scale = 1.0 + params.jitter * rng.uniform(-1.0, 1.0)

    T = max(2, int(round(params.duration * params.fps)))
    t = np.arange(T) / params.fps
    J = model.num_joints
    dof = np.tile(model.default_pose, (T, 1))
    root_pos = np.zeros((T, 3))
    root_pos[:, 2] = model.nominal_height
    yaw = np.zeros(T)
    roll = np.zeros(T)
    pitch = np.zeros(T)

    def jidx(name):
        return model.joint_index(name)

    two_pi_ft = 2.0 * np.pi * params.freq * t + phase

    if kind == "stand":
        pass
    elif kind in ("walk", "run"):
        freq = params.freq * (2.0 if kind == "run" else 1.0)
        stride = min(0.8, params.stride * (1.5 if kind == "run" else 1.0))
        w = 2.0 * np.pi * freq * t + phase
        leg = abs(model.offset[jidx("left_knee")][2]) + abs(
            model.offset[jidx("left_ankle_pitch")][2]
        )
        swing = np.arcsin(min(0.99, 0.5 * stride / leg)) * amp_scale
        speed = stride * freq
        root_pos[:, 0] = speed * t
        for side, sgn in (("left", 1.0), ("right", -1.0)):
            hip = -swing * np.sin(sgn * w)
            knee_lift = 0.25 * (1.0 + swing) * np.maximum(0.0, np.sin(sgn * w))
            dof[:, jidx(f"{side}_hip_pitch")] = hip
            dof[:, jidx(f"{side}_knee")] = knee_lift
            dof[:, jidx(f"{side}_ankle_pitch")] = -(knee_lift + hip) * 0.5
            dof[:, jidx(f"{side}_shoulder_pitch")] = 0.3 * np.sin(sgn * w + np.pi)
    elif kind == "squat":
        bend = params.amplitude * amp_scale * 0.5 * (1.0 - np.cos(two_pi_ft))
        shank = abs(model.offset[jidx("left_knee")][2])
        thigh = abs(model.offset[jidx("left_ankle_pitch")][2])
        hip_drop = abs(model.offset[jidx("left_hip_pitch")][2])
        for side in ("left", "right"):
            dof[:, jidx(f"{side}_hip_pitch")] = -0.5 * bend
            dof[:, jidx(f"{side}_knee")] = bend
            dof[:, jidx(f"{side}_ankle_pitch")] = -0.5 * bend
        foot = model.nominal_height - hip_drop - shank - thigh
        root_pos[:, 2] = hip_drop + (shank + thigh) * np.cos(0.5 * bend) + foot
    elif kind == "arm_wave":
        a = params.amplitude * amp_scale
        for side, sgn in (("left", 1.0), ("right", -1.0)):
            dof[:, jidx(f"{side}_shoulder_pitch")] = -1.0 + a * np.sin(sgn * two_pi_ft)
            dof[:, jidx(f"{side}_shoulder_roll")] = sgn * 0.3 * a * np.cos(two_pi_ft)
            dof[:, jidx(f"{side}_elbow")] = 0.6 * a * np.sin(two_pi_ft + 0.5 * np.pi)
    elif kind == "turn":
        yaw = params.turn_rate * t
        a = 0.2 * amp_scale
        for side, sgn in (("left", 1.0), ("right", -1.0)):
            dof[:, jidx(f"{side}_hip_pitch")] = -a * np.abs(np.sin(sgn * two_pi_ft)) * 0.5

    dof = np.clip(dof, model.q_min, model.q_max)
    quat = quat_from_rpy(roll, pitch, yaw)
    kp_world = keypoint_world(model, root_pos, quat, dof)
    rel = kp_world - root_pos[:, None, :]
    kp_local = np.einsum("nij,nkj->nki", rot_z(-yaw), rel)

    if kind == "stand":
        lin = np.zeros((T, 3))
        ang = np.zeros((T, 3))
    else:
        lin = _central_diff(root_pos, params.fps)
        ang = _ang_vel_from_quats(quat, params.fps)

    return MotionClip(
        fps=params.fps,
        root_pos=root_pos,
        root_quat=quat,
        root_lin_vel=lin,
        root_ang_vel=ang,
        dof_pos=dof,
        keypoints_local=kp_local,
        height=root_pos[:, 2].copy(),
        name=f"{kind}_{seed}",
        tags=(kind,),
    )
