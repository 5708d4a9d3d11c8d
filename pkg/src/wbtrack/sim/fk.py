"""Forward kinematics over the joint tree, batched across env instances."""

import numpy as np

from ..geometry import quat_to_mat, rot_z, yaw_from_quat


def _axis_rot(axis, q):
    """Rodrigues rotation about a fixed unit axis; q has shape (N,)."""
    x, y, z = axis
    K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    c = np.cos(q)[:, None, None]
    s = np.sin(q)[:, None, None]
    eye = np.eye(3)
    return eye + s * K + (1.0 - c) * (K @ K)


def forward_kinematics(model, root_pos, root_quat, dof_pos):
    """Joint frame origins and rotations in world coordinates.

    Returns (joint_pos (N,J,3), joint_rot (N,J,3,3))."""
    root_pos = np.atleast_2d(root_pos)
    root_quat = np.atleast_2d(root_quat)
    dof_pos = np.atleast_2d(dof_pos)
    N, J = dof_pos.shape
    R0 = quat_to_mat(root_quat)
    joint_pos = np.empty((N, J, 3))
    joint_rot = np.empty((N, J, 3, 3))
    for j in range(J):
        p = model.parent[j]
        Rp = R0 if p < 0 else joint_rot[:, p]
        op = root_pos if p < 0 else joint_pos[:, p]
        joint_pos[:, j] = op + np.einsum("nij,j->ni", Rp, model.offset[j])
        joint_rot[:, j] = Rp @ _axis_rot(model.axis[j], dof_pos[:, j])
    return joint_pos, joint_rot


def _attached_points(joint_pos, joint_rot, joint_idx, offsets):
    """World positions of points attached to joint frames.

    joint_idx (P,), offsets (P,3) -> (N,P,3)."""
    rot = joint_rot[:, joint_idx]                      # (N,P,3,3)
    pos = joint_pos[:, joint_idx]                      # (N,P,3)
    return pos + np.einsum("npij,pj->npi", rot, offsets)


def keypoint_world(model, root_pos, root_quat, dof_pos):
    jp, jr = forward_kinematics(model, root_pos, root_quat, dof_pos)
    return _attached_points(jp, jr, model.kp_joint, model.kp_offset)


def keypoint_positions(model, state):
    """K=12 keypoints in the heading-local root frame (yaw-aligned,
    root-centered). Invariant under world yaw/translation of the state."""
    kp = keypoint_world(model, state.root_pos, state.root_quat, state.dof_pos)
    yaw = yaw_from_quat(state.root_quat)
    Rinv = rot_z(-np.atleast_1d(yaw))                  # (N,3,3)
    rel = kp - np.atleast_2d(state.root_pos)[:, None, :]
    out = np.einsum("nij,nkj->nki", Rinv, rel)
    return out[0] if np.ndim(state.root_pos) == 1 else out


def contact_points_world(model, root_pos, root_quat, dof_pos):
    jp, jr = forward_kinematics(model, root_pos, root_quat, dof_pos)
    return _attached_points(jp, jr, model.contact_joint, model.contact_offset)
