"""Motion clip data model, MCLIP v1 file I/O, resampling and frame transforms.

A clip stores time-stamped reference frames: floating-base pose/velocity,
joint angles and K=12 body keypoints expressed in the heading-local root
frame. Clips are immutable after construction; all transforms return new
objects.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import (
    quat_normalize,
    quat_mul,
    quat_conj,
    quat_slerp,
    quat_from_rpy,
    rpy_from_quat,
    rot_z,
    wrap_angle,
)

NUM_KEYPOINTS = 12
QUAT_NORM_TOL = 1e-6


class ClipParseError(ValueError):
    """Raised for malformed clip files; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class MotionFrame:
    """One reference frame.

    root_pos/quat and velocities are world-frame; dof_pos are joint angles;
    keypoints_local is (12, 3) in the heading-local root frame; height is
    root height above ground.
    """

    root_pos: np.ndarray
    root_quat: np.ndarray
    root_lin_vel: np.ndarray
    root_ang_vel: np.ndarray
    dof_pos: np.ndarray
    keypoints_local: np.ndarray
    height: float

    def __post_init__(self):
        if abs(np.linalg.norm(self.root_quat) - 1.0) > QUAT_NORM_TOL:
            raise ValueError(
                f"non-unit quaternion (norm {np.linalg.norm(self.root_quat):.6g})"
            )
        if self.keypoints_local.shape != (NUM_KEYPOINTS, 3):
            raise ValueError(
                f"expected {NUM_KEYPOINTS}x3 keypoints, got {self.keypoints_local.shape}"
            )

    @property
    def yaw(self):
        return float(rpy_from_quat(self.root_quat)[2])


@dataclass(frozen=True)
class MotionClip:
    """Ordered frames at a fixed rate, stored as stacked arrays."""

    fps: float
    root_pos: np.ndarray      # (T, 3)
    root_quat: np.ndarray     # (T, 4)
    root_lin_vel: np.ndarray  # (T, 3)
    root_ang_vel: np.ndarray  # (T, 3)
    dof_pos: np.ndarray       # (T, J)
    keypoints_local: np.ndarray  # (T, 12, 3)
    height: np.ndarray        # (T,)
    name: str = "clip"
    tags: tuple = ()

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if len(self) < 2:
            raise ValueError("clip needs at least 2 frames")
        norms = np.linalg.norm(self.root_quat, axis=-1)
        if np.any(np.abs(norms - 1.0) > QUAT_NORM_TOL):
            raise ValueError("non-unit quaternion in clip")

    def __len__(self):
        return self.root_pos.shape[0]

    @property
    def num_joints(self):
        return self.dof_pos.shape[1]

    @property
    def duration(self):
        return (len(self) - 1) / self.fps

    def frame(self, i) -> MotionFrame:
        return MotionFrame(
            root_pos=self.root_pos[i],
            root_quat=self.root_quat[i],
            root_lin_vel=self.root_lin_vel[i],
            root_ang_vel=self.root_ang_vel[i],
            dof_pos=self.dof_pos[i],
            keypoints_local=self.keypoints_local[i],
            height=float(self.height[i]),
        )

    @property
    def frames(self):
        return [self.frame(i) for i in range(len(self))]

    @classmethod
    def from_frames(cls, frames, fps, name="clip", tags=()):
        return cls(
            fps=fps,
            root_pos=np.stack([f.root_pos for f in frames]),
            root_quat=np.stack([f.root_quat for f in frames]),
            root_lin_vel=np.stack([f.root_lin_vel for f in frames]),
            root_ang_vel=np.stack([f.root_ang_vel for f in frames]),
            dof_pos=np.stack([f.dof_pos for f in frames]),
            keypoints_local=np.stack([f.keypoints_local for f in frames]),
            height=np.array([f.height for f in frames]),
            name=name,
            tags=tuple(tags),
        )


def _central_diff(x, fps):
    """Central finite differences along axis 0, one-sided at the ends."""
    v = np.empty_like(x)
    v[1:-1] = (x[2:] - x[:-2]) * (0.5 * fps)
    v[0] = (x[1] - x[0]) * fps
    v[-1] = (x[-1] - x[-2]) * fps
    return v


def _ang_vel_from_quats(quat, fps):
    """World-frame angular velocity via quaternion differences."""
    T = quat.shape[0]
    omega = np.zeros((T, 3))
    dq = quat_mul(quat[1:], quat_conj(quat[:-1]))
    # rotation vector of each step quaternion
    w = np.clip(dq[:, 0], -1.0, 1.0)
    angle = 2.0 * np.arccos(w)
    sin_half = np.sqrt(np.maximum(1.0 - w * w, 0.0))
    axis = np.where(sin_half[:, None] > 1e-9, dq[:, 1:] / np.maximum(sin_half, 1e-12)[:, None], 0.0)
    step = axis * (angle * fps)[:, None]
    omega[1:-1] = 0.5 * (step[1:] + step[:-1])
    omega[0] = step[0]
    omega[-1] = step[-1]
    return omega


# ---------------------------------------------------------------------------
# MCLIP v1 text format

def save_clip(clip: MotionClip, path):
    """Write a clip in the MCLIP v1 line format."""
    with open(path, "w") as fh:
        fh.write(f"MCLIP v1 fps={clip.fps:.17g} J={clip.num_joints} K={NUM_KEYPOINTS}\n")
        for i in range(len(clip)):
            fields = np.concatenate(
                [
                    clip.root_pos[i],
                    clip.root_quat[i],
                    clip.root_lin_vel[i],
                    clip.root_ang_vel[i],
                    clip.dof_pos[i],
                    clip.keypoints_local[i].reshape(-1),
                    [clip.height[i]],
                ]
            )
            fh.write(" ".join(f"{v:.17g}" for v in fields) + "\n")


def load_clip(path) -> MotionClip:
    """Parse an MCLIP v1 file; `-` velocity blocks are reconstructed by
    central finite differences after all frames are read."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ClipParseError("empty file", line=1)
    header = lines[0].split()
    if len(header) != 5 or header[0] != "MCLIP" or header[1] != "v1":
        raise ClipParseError(f"bad header {lines[0]!r}", line=1)
    try:
        fps = float(header[2].removeprefix("fps="))
        J = int(header[3].removeprefix("J="))
        K = int(header[4].removeprefix("K="))
    except ValueError as exc:
        raise ClipParseError(f"bad header field: {exc}", line=1)
    if K != NUM_KEYPOINTS:
        raise ClipParseError(f"K={K} unsupported (expected {NUM_KEYPOINTS})", line=1)
    if fps <= 0:
        raise ClipParseError("fps must be positive", line=1)

    rows = {k: [] for k in ("pos", "quat", "lin", "ang", "dof", "kp", "h")}
    need_lin = need_ang = False
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        toks = raw.split()
        # velocity blocks may each be a single '-' token
        def take(n, allow_dash=False):
            nonlocal toks
            if allow_dash and toks and toks[0] == "-":
                toks = toks[1:]
                return None
            if len(toks) < n:
                raise ClipParseError("truncated frame line", line=lineno)
            head, toks = toks[:n], toks[n:]
            try:
                return np.array([float(t) for t in head])
            except ValueError as exc:
                raise ClipParseError(f"bad number: {exc}", line=lineno)

        pos = take(3)
        quat = take(4)
        lin = take(3, allow_dash=True)
        ang = take(3, allow_dash=True)
        dof = take(J)
        kp = take(3 * NUM_KEYPOINTS)
        h = take(1)
        if toks:
            raise ClipParseError(f"{len(toks)} extra fields on frame line", line=lineno)
        if abs(np.linalg.norm(quat) - 1.0) > QUAT_NORM_TOL:
            raise ClipParseError(
                f"non-unit quaternion (norm {np.linalg.norm(quat):.6g})", line=lineno
            )
        need_lin |= lin is None
        need_ang |= ang is None
        rows["pos"].append(pos)
        rows["quat"].append(quat)
        rows["lin"].append(lin)
        rows["ang"].append(ang)
        rows["dof"].append(dof)
        rows["kp"].append(kp.reshape(NUM_KEYPOINTS, 3))
        rows["h"].append(h[0])

    if len(rows["pos"]) < 2:
        raise ClipParseError("clip needs at least 2 frames", line=len(lines))

    root_pos = np.stack(rows["pos"])
    root_quat = quat_normalize(np.stack(rows["quat"]))
    if need_lin:
        lin = _central_diff(root_pos, fps)
    else:
        lin = np.stack(rows["lin"])
    if need_ang:
        ang = _ang_vel_from_quats(root_quat, fps)
    else:
        ang = np.stack(rows["ang"])

    return MotionClip(
        fps=fps,
        root_pos=root_pos,
        root_quat=root_quat,
        root_lin_vel=lin,
        root_ang_vel=ang,
        dof_pos=np.stack(rows["dof"]),
        keypoints_local=np.stack(rows["kp"]),
        height=np.array(rows["h"]),
        name=str(path),
    )


# ---------------------------------------------------------------------------
# Resampling and frame transforms

def resample_clip(clip: MotionClip, target_fps) -> MotionClip:
    """Resample to target_fps: linear interpolation for vector quantities,
    spherical interpolation for root quaternions. Duration is preserved to
    within one output frame period."""
    if target_fps <= 0:
        raise ValueError("target_fps must be positive")
    if target_fps == clip.fps:
        return clip
    duration = clip.duration
    n_out = max(2, int(np.floor(duration * target_fps + 1e-9)) + 1)
    t_out = np.arange(n_out) / target_fps
    s = np.clip(t_out * clip.fps, 0.0, len(clip) - 1.0)
    i0 = np.floor(s).astype(int)
    i1 = np.minimum(i0 + 1, len(clip) - 1)
    w = (s - i0)[:, None]

    def lerp(x):
        flat = x.reshape(len(clip), -1)
        out = flat[i0] * (1.0 - w) + flat[i1] * w
        return out.reshape((n_out,) + x.shape[1:])

    quat = np.stack(
        [quat_slerp(clip.root_quat[a], clip.root_quat[b], float(f)) for a, b, f in zip(i0, i1, w[:, 0])]
    )
    return MotionClip(
        fps=float(target_fps),
        root_pos=lerp(clip.root_pos),
        root_quat=quat_normalize(quat),
        root_lin_vel=lerp(clip.root_lin_vel),
        root_ang_vel=lerp(clip.root_ang_vel),
        dof_pos=lerp(clip.dof_pos),
        keypoints_local=lerp(clip.keypoints_local),
        height=lerp(clip.height[:, None])[:, 0],
        name=clip.name,
        tags=clip.tags,
    )


def to_local_frame(frame: MotionFrame, robot_root_pos, robot_yaw) -> MotionFrame:
    """Re-express a frame in the yaw-aligned frame centered at robot_root_pos.

    Keypoints (root-relative) and velocities are rotated by the wrapped yaw
    difference; roll/pitch are unchanged; the output yaw is the wrapped
    difference in [-pi, pi)."""
    roll, pitch, yaw = rpy_from_quat(frame.root_quat)
    dyaw = float(wrap_angle(yaw - robot_yaw))
    R_d = rot_z(dyaw)          # rotates frame-heading-local into robot-heading-local
    R_inv = rot_z(-robot_yaw)  # world into robot heading frame
    return MotionFrame(
        root_pos=R_inv @ (frame.root_pos - np.asarray(robot_root_pos, dtype=np.float64)),
        root_quat=quat_from_rpy(float(roll), float(pitch), dyaw),
        root_lin_vel=R_inv @ frame.root_lin_vel,
        root_ang_vel=R_inv @ frame.root_ang_vel,
        dof_pos=frame.dof_pos,
        keypoints_local=frame.keypoints_local @ R_d.T,
        height=frame.height,
    )
