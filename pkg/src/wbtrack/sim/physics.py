"""Reduced articulated humanoid dynamics.

Floating rigid base (lumped mass and scalar rotational inertia) plus direct
second-order joint dynamics, integrated with semi-implicit Euler at 500 Hz.
Ground contact is penalty-based with a hard Coulomb cap; contact points are
attached to the two foot links via forward kinematics.

All state arrays carry a leading env dimension N so that many instances
advance in lock-step with no shared mutable state.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import quat_from_rotvec, quat_mul, quat_normalize, quat_to_mat
from .fk import contact_points_world, keypoint_world

GRAVITY = 9.81
SIM_DT = 1.0 / 500.0
DECIMATION = 10

# penalty contact constants
CONTACT_KN = 2.0e5     # normal stiffness N/m
CONTACT_DN = 2.0e3     # normal damping N·s/m
CONTACT_KT = 2.0e3     # tangential viscous gain N·s/m
CONTACT_THRESHOLD = 1e-4
LIMIT_SPRING = 200.0   # restoring torque per rad beyond a joint limit


class IntegrationFault(RuntimeError):
    """Raised when the integrator produces a non-finite quantity."""

    def __init__(self, quantity):
        super().__init__(f"non-finite value in {quantity}")
        self.quantity = quantity


@dataclass
class PhysicalParams:
    """Per-episode randomized physical properties (batched over envs)."""

    friction: np.ndarray      # (N,)
    motor_scale: np.ndarray   # (N, J)

    @classmethod
    def nominal(cls, model, n=1):
        return cls(
            friction=np.full(n, 1.0),
            motor_scale=np.ones((n, model.num_joints)),
        )


@dataclass
class RandomizationRanges:
    friction: tuple = (0.3, 1.2)
    motor_strength: tuple = (0.8, 1.2)


def randomize_params(model, rng, ranges=None, n=1) -> PhysicalParams:
    """Uniform per-episode sample of the randomized physical parameters."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    ranges = ranges or RandomizationRanges()
    return PhysicalParams(
        friction=rng.uniform(*ranges.friction, size=n),
        motor_scale=rng.uniform(*ranges.motor_strength, size=(n, model.num_joints)),
    )


@dataclass
class SimState:
    """Batched simulator state; index [i] views one env instance."""

    root_pos: np.ndarray       # (N, 3)
    root_quat: np.ndarray      # (N, 4) w-first
    root_lin_vel: np.ndarray   # (N, 3)
    root_ang_vel: np.ndarray   # (N, 3)
    dof_pos: np.ndarray        # (N, J)
    dof_vel: np.ndarray        # (N, J)
    last_torques: np.ndarray   # (N, J)
    foot_contact: np.ndarray   # (N, 2) bool
    foot_force: np.ndarray     # (N, 2, 3)
    air_time: np.ndarray       # (N, 2) seconds since last stance
    landed_air_time: np.ndarray  # (N, 2) air time banked at touchdown this substep
    time: np.ndarray           # (N,)
    prev_contact_pos: np.ndarray  # (N, C, 3) for finite-difference point velocity

    @property
    def n_envs(self):
        return self.root_pos.shape[0]

    def copy(self):
        return SimState(**{k: v.copy() for k, v in self.__dict__.items()})

    def set_rows(self, idx, other):
        """Overwrite env rows idx with rows from another state (in place)."""
        for k in self.__dict__:
            getattr(self, k)[idx] = getattr(other, k)[idx]


def _finite_or_fault(state):
    for name in ("root_pos", "root_quat", "root_lin_vel", "root_ang_vel", "dof_pos", "dof_vel"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise IntegrationFault(name)


def reset_to_frame(model, frame, params=None, dof_vel=None, n=1) -> SimState:
    """Reference-state initialization: state matches the frame pose/velocity
    exactly; contacts are recomputed from forward kinematics."""
    if frame.dof_pos.shape[0] != model.num_joints:
        raise ValueError(
            f"frame has {frame.dof_pos.shape[0]} joints, model {model.num_joints}"
        )
    J = model.num_joints
    root_pos = np.tile(frame.root_pos, (n, 1))
    root_quat = np.tile(frame.root_quat, (n, 1))
    dof_pos = np.tile(frame.dof_pos, (n, 1))
    dof_vel = np.zeros((n, J)) if dof_vel is None else np.tile(dof_vel, (n, 1))
    cp = contact_points_world(model, root_pos, root_quat, dof_pos)
    in_contact = cp[..., 2] < CONTACT_THRESHOLD
    foot_contact = np.stack(
        [in_contact[:, model.contact_foot == f].any(axis=1) for f in (0, 1)], axis=1
    )
    omega = np.tile(frame.root_ang_vel, (n, 1))
    v = np.tile(frame.root_lin_vel, (n, 1))
    # seed point velocities consistent with the base twist
    cp_vel = v[:, None, :] + np.cross(omega[:, None, :], cp - root_pos[:, None, :])
    return SimState(
        root_pos=root_pos,
        root_quat=root_quat,
        root_lin_vel=v,
        root_ang_vel=omega,
        dof_pos=dof_pos,
        dof_vel=dof_vel,
        last_torques=np.zeros((n, J)),
        foot_contact=foot_contact,
        foot_force=np.zeros((n, 2, 3)),
        air_time=np.zeros((n, 2)),
        landed_air_time=np.zeros((n, 2)),
        time=np.zeros(n),
        prev_contact_pos=cp - cp_vel * SIM_DT,
    )


def pd_torques(model, state, action, params=None, kp=None, kd=None):
    """tau = clamp(scale * (kp (a - q) - kd qdot), +-torque_limit).

    action holds target joint positions (N, J) or (J,)."""
    action = np.atleast_2d(action)
    if not np.all(np.isfinite(action)):
        raise ValueError("non-finite action")
    kp = model.kp if kp is None else kp
    kd = model.kd if kd is None else kd
    scale = params.motor_scale if params is not None else 1.0
    tau = scale * (kp * (action - state.dof_pos) - kd * state.dof_vel)
    return np.clip(tau, -model.torque_limit, model.torque_limit)


def step(model, state, torques, dt=SIM_DT, params=None) -> SimState:
    """One semi-implicit Euler substep. Deterministic; raises
    IntegrationFault on divergence."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    torques = np.atleast_2d(torques)
    friction = params.friction if params is not None else np.ones(state.n_envs)

    cp = contact_points_world(model, state.root_pos, state.root_quat, state.dof_pos)
    cp_vel = (cp - state.prev_contact_pos) / dt

    pen = np.maximum(0.0, -cp[..., 2])
    fz = np.where(pen > 0.0, CONTACT_KN * pen - CONTACT_DN * cp_vel[..., 2], 0.0)
    fz = np.maximum(fz, 0.0)
    ft = -CONTACT_KT * cp_vel[..., :2]
    ft_norm = np.linalg.norm(ft, axis=-1)
    cap = friction[:, None] * fz
    scale = np.where(ft_norm > cap, cap / np.maximum(ft_norm, 1e-12), 1.0)
    ft = ft * scale[..., None]
    forces = np.concatenate([ft, fz[..., None]], axis=-1)  # (N, C, 3)

    foot_force = np.stack(
        [forces[:, model.contact_foot == f].sum(axis=1) for f in (0, 1)], axis=1
    )
    point_contact = cp[..., 2] < CONTACT_THRESHOLD
    foot_contact = np.stack(
        [point_contact[:, model.contact_foot == f].any(axis=1) for f in (0, 1)], axis=1
    )

    # base dynamics
    total_f = forces.sum(axis=1)
    total_f[:, 2] -= model.total_mass * GRAVITY
    torque = np.cross(cp - state.root_pos[:, None, :], forces).sum(axis=1)
    lin_vel = state.root_lin_vel + (total_f / model.total_mass) * dt
    ang_vel = state.root_ang_vel + (torque / model.rot_inertia) * dt
    root_pos = state.root_pos + lin_vel * dt
    root_quat = quat_normalize(quat_mul(quat_from_rotvec(ang_vel * dt), state.root_quat))

    # joint dynamics with soft limits
    over = np.maximum(0.0, state.dof_pos - model.q_max)
    under = np.maximum(0.0, model.q_min - state.dof_pos)
    tau_j = torques + LIMIT_SPRING * (under - over)
    dof_vel = state.dof_vel + (tau_j / model.joint_inertia) * dt
    dof_pos = state.dof_pos + dof_vel * dt

    # air-time bookkeeping: bank the flight duration at touchdown
    was_air = ~state.foot_contact
    touchdown = was_air & foot_contact
    landed = np.where(touchdown, state.air_time + dt, 0.0)
    air_time = np.where(foot_contact, 0.0, state.air_time + dt)

    new = SimState(
        root_pos=root_pos,
        root_quat=root_quat,
        root_lin_vel=lin_vel,
        root_ang_vel=ang_vel,
        dof_pos=dof_pos,
        dof_vel=dof_vel,
        last_torques=torques.copy(),
        foot_contact=foot_contact,
        foot_force=foot_force,
        air_time=air_time,
        landed_air_time=landed,
        time=state.time + dt,
        prev_contact_pos=cp,
    )
    _finite_or_fault(new)
    return new


def advance_python(model, state, targets, params, n_substeps=DECIMATION, dt=SIM_DT):
    """PD control + integration fused over one policy step (numpy backend).

    Returns (state, landed_air_time accumulated over the substeps)."""
    landed = np.zeros((state.n_envs, 2))
    for _ in range(n_substeps):
        tau = pd_torques(model, state, targets, params)
        state = step(model, state, tau, dt, params)
        landed += state.landed_air_time
    return state, landed
