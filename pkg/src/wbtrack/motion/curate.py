"""Dataset curation: per-clip feasibility gates plus a pose-coverage
diversity score over the accepted set.

Feasibility is judged per clip, independently of the rest of the input, so
curation is order-insensitive and trivially parallel.
"""

from dataclasses import dataclass

import numpy as np

from ..sim.model import LOWER_KEYPOINTS
from .clip import MotionClip, _central_diff

# ankle keypoint rows inside the lower-body block
_ANKLE_ROWS = (10, 11)


@dataclass
class CurationConfig:
    model: object
    max_limit_violation_frac: float = 0.02
    max_joint_speed: float = 20.0       # rad/s
    max_root_speed: float = 3.5         # m/s
    max_airborne_frac: float = 0.1
    max_foot_slip: float = 0.05         # m/frame while in stance
    foot_clearance: float = 0.08        # m, stance/airborne threshold
    diversity_bins: int = 16

    def __post_init__(self):
        for f in ("max_limit_violation_frac", "max_joint_speed", "max_root_speed",
                  "max_airborne_frac", "max_foot_slip", "foot_clearance"):
            if getattr(self, f) <= 0:
                raise ValueError(f"{f} must be positive")


@dataclass
class CurationReport:
    name: str
    limit_violation_frac: float
    max_joint_speed: float
    max_root_speed: float
    foot_slip: float
    airborne_frac: float
    accepted: bool
    diversity_score: float = 0.0

    def reasons(self, cfg: CurationConfig):
        out = []
        if self.limit_violation_frac > cfg.max_limit_violation_frac:
            out.append(f"limit violations on {self.limit_violation_frac:.0%} of frames")
        if self.max_joint_speed > cfg.max_joint_speed:
            out.append(f"joint speed {self.max_joint_speed:.1f} rad/s")
        if self.max_root_speed > cfg.max_root_speed:
            out.append(f"root speed {self.max_root_speed:.2f} m/s")
        if self.foot_slip > cfg.max_foot_slip:
            out.append(f"foot slip {self.foot_slip:.3f} m/frame")
        if self.airborne_frac > cfg.max_airborne_frac:
            out.append(f"airborne {self.airborne_frac:.0%} of frames")
        return out


def _ankle_world(clip):
    """World xy and z of both ankle keypoints, (T, 2, 3)."""
    from ..geometry import rot_z, rpy_from_quat

    yaw = rpy_from_quat(clip.root_quat)[2]
    ankles = clip.keypoints_local[:, list(_ANKLE_ROWS)]
    world = np.einsum("nij,nkj->nki", rot_z(yaw), ankles) + clip.root_pos[:, None, :]
    return world


def assess_clip(clip: MotionClip, cfg: CurationConfig) -> CurationReport:
    model = cfg.model
    violated = (clip.dof_pos < model.q_min) | (clip.dof_pos > model.q_max)
    limit_frac = float(np.mean(violated.any(axis=1)))
    dof_vel = _central_diff(clip.dof_pos, clip.fps)
    max_speed = float(np.max(np.abs(dof_vel))) if clip.dof_pos.size else 0.0
    max_root = float(np.max(np.linalg.norm(clip.root_lin_vel, axis=1)))

    ankles = _ankle_world(clip)
    foot_z = ankles[..., 2]
    stance = foot_z < cfg.foot_clearance
    airborne = float(np.mean(~stance.any(axis=1)))
    # per-frame xy displacement of each foot while it stays in stance
    disp = np.linalg.norm(np.diff(ankles[..., :2], axis=0), axis=-1)
    in_stance = stance[:-1] & stance[1:]
    slip = float(np.max(disp[in_stance])) if np.any(in_stance) else 0.0

    accepted = (
        limit_frac <= cfg.max_limit_violation_frac
        and max_speed <= cfg.max_joint_speed
        and max_root <= cfg.max_root_speed
        and airborne <= cfg.max_airborne_frac
        and slip <= cfg.max_foot_slip
    )
    return CurationReport(
        name=clip.name,
        limit_violation_frac=limit_frac,
        max_joint_speed=max_speed,
        max_root_speed=max_root,
        foot_slip=slip,
        airborne_frac=airborne,
        accepted=accepted,
    )


def diversity_score(clips, cfg: CurationConfig) -> float:
    """Fraction of occupied bins in per-joint histograms over the upper-body
    joints, averaged across joints."""
    if not clips:
        return 0.0
    model = cfg.model
    upper = model.upper_joint_indices
    pooled = np.concatenate([c.dof_pos[:, upper] for c in clips], axis=0)
    lo, hi = model.q_min[upper], model.q_max[upper]
    frac = np.clip((pooled - lo) / (hi - lo), 0.0, 1.0 - 1e-12)
    bins = np.floor(frac * cfg.diversity_bins).astype(int)
    occupied = [len(np.unique(bins[:, k])) for k in range(len(upper))]
    return float(np.mean(occupied) / cfg.diversity_bins)


def curate_dataset(clips, cfg: CurationConfig):
    """Returns (accepted clips, reports). Acceptance of each clip depends
    only on that clip; the diversity score is a property of the accepted set
    and is stamped on every accepted report."""
    if not clips:
        raise ValueError("empty clip list")
    reports = [assess_clip(c, cfg) for c in clips]
    accepted = [c for c, r in zip(clips, reports) if r.accepted]
    score = diversity_score(accepted, cfg)
    for r in reports:
        if r.accepted:
            r.diversity_score = score
    return accepted, reports
