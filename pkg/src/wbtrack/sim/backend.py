"""Simulation backend selection.

The hot loop (PD control + contact + integration, fused over the 10 substeps
of one policy step) exists twice: a Cython kernel built at install time and a
vectorized numpy fallback. The compiled kernel is used when importable;
WBTRACK_SIM_BACKEND=python|compiled forces a choice.
"""

import os

import numpy as np

from .physics import (
    DECIMATION,
    SIM_DT,
    IntegrationFault,
    SimState,
    advance_python,
)

try:
    from . import _kernel
except ImportError:
    _kernel = None

_choice = os.environ.get("WBTRACK_SIM_BACKEND", "auto")
if _choice == "compiled" and _kernel is None:
    raise ImportError("WBTRACK_SIM_BACKEND=compiled but the Cython kernel is not built")
_use_kernel = _kernel is not None and _choice != "python"


def backend_name():
    return "compiled" if _use_kernel else "python"


def _advance_compiled(model, state, targets, params, n_substeps=DECIMATION, dt=SIM_DT):
    targets = np.ascontiguousarray(np.atleast_2d(targets), dtype=np.float64)
    if not np.all(np.isfinite(targets)):
        raise ValueError("non-finite action")
    new = state.copy()
    landed = np.zeros((state.n_envs, 2))
    foot_contact = new.foot_contact.astype(np.uint8)
    fault = _kernel.advance(
        np.ascontiguousarray(model.parent.astype(np.int32)),
        np.ascontiguousarray(model.axis),
        np.ascontiguousarray(model.offset),
        np.ascontiguousarray(model.q_min),
        np.ascontiguousarray(model.q_max),
        np.ascontiguousarray(model.torque_limit),
        np.ascontiguousarray(model.joint_inertia),
        np.ascontiguousarray(model.kp),
        np.ascontiguousarray(model.kd),
        np.ascontiguousarray(model.contact_joint.astype(np.int32)),
        np.ascontiguousarray(model.contact_offset),
        np.ascontiguousarray(model.contact_foot.astype(np.int32)),
        float(model.total_mass),
        float(model.rot_inertia),
        new.root_pos, new.root_quat, new.root_lin_vel, new.root_ang_vel,
        new.dof_pos, new.dof_vel, new.last_torques,
        foot_contact, new.foot_force, new.air_time, new.landed_air_time,
        new.time, new.prev_contact_pos,
        targets,
        np.ascontiguousarray(params.friction),
        np.ascontiguousarray(params.motor_scale),
        int(n_substeps), float(dt),
        landed,
    )
    if fault:
        raise IntegrationFault("state")
    new.foot_contact = foot_contact.astype(bool)
    return new, landed


def advance(model, state, targets, params, n_substeps=DECIMATION, dt=SIM_DT):
    """Fused PD + dynamics over one policy step; returns (state, landed air
    time per foot accumulated over the substeps)."""
    if _use_kernel:
        return _advance_compiled(model, state, targets, params, n_substeps, dt)
    return advance_python(model, state, targets, params, n_substeps, dt)
