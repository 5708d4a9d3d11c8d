"""Humanoid model description: kinematic tree, limits, keypoint and contact
attachments, plus the HMODEL v1 text format and the shipped defaults
(g1_like_23dof, h1_like_21dof, test_12dof)."""

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

KEYPOINT_ORDER = (
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_hand", "right_hand",
    "left_hip", "right_hip",
    "left_knee", "right_knee",
    "left_ankle", "right_ankle",
)
UPPER_KEYPOINTS = slice(0, 6)
LOWER_KEYPOINTS = slice(6, 12)

_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}


class ModelParseError(ValueError):
    pass


@dataclass
class HumanoidModel:
    name: str
    joint_names: list
    parent: np.ndarray          # (J,) int, -1 = floating base
    axis: np.ndarray            # (J, 3)
    offset: np.ndarray          # (J, 3) translation from parent frame
    q_min: np.ndarray           # (J,)
    q_max: np.ndarray
    torque_limit: np.ndarray
    default_pose: np.ndarray
    joint_inertia: np.ndarray   # reflected inertia for direct joint dynamics
    kp: np.ndarray              # PD gains per joint
    kd: np.ndarray
    group: list                 # e.g. hip / knee / ankle / waist / shoulder ...
    upper_body: np.ndarray      # (J,) bool
    kp_joint: np.ndarray        # (12,) keypoint attachment joint index
    kp_offset: np.ndarray       # (12, 3) offset in that joint's frame
    contact_joint: np.ndarray   # (C,) joint index per contact point
    contact_offset: np.ndarray  # (C, 3)
    contact_foot: np.ndarray    # (C,) 0 = left, 1 = right
    foot_joints: np.ndarray     # (2,)
    total_mass: float
    rot_inertia: float          # lumped scalar rotational inertia
    nominal_height: float

    def __post_init__(self):
        J = len(self.joint_names)
        if not np.all(self.q_min < self.q_max):
            raise ModelParseError("q_min must be < q_max for every joint")
        if len(np.unique(self.contact_foot)) != 2:
            raise ModelParseError("exactly 2 foot links required")
        # tree must be acyclic with parents preceding children
        for j in range(J):
            if self.parent[j] >= j:
                raise ModelParseError("parents must precede children in joint table")

    @property
    def num_joints(self):
        return len(self.joint_names)

    def joint_index(self, name):
        return self.joint_names.index(name)

    def group_indices(self, *names):
        return np.array([j for j, g in enumerate(self.group) if g in names], dtype=int)

    @property
    def upper_joint_indices(self):
        return np.flatnonzero(self.upper_body)

    @property
    def lower_joint_indices(self):
        return np.flatnonzero(~self.upper_body)


def _kv(tok, lineno):
    if "=" not in tok:
        raise ModelParseError(f"line {lineno}: expected key=value, got {tok!r}")
    k, v = tok.split("=", 1)
    return k, v


def parse_model(text, name="model") -> HumanoidModel:
    joints = []
    keypoints = {}
    contacts = []
    foot_joints = None
    base = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kind, toks = toks[0], toks[1:]
        if kind == "HMODEL":
            continue
        if kind == "name":
            name = line.split(None, 1)[1]
            continue
        kv = dict(_kv(t, lineno) for t in toks)
        if kind == "base":
            base = kv
        elif kind == "joint":
            joints.append((lineno, kv))
        elif kind == "keypoint":
            keypoints[kv["name"]] = kv
        elif kind == "contact":
            contacts.append(kv)
        elif kind == "foot":
            foot_joints = kv["joints"].split(",")
        else:
            raise ModelParseError(f"line {lineno}: unknown record {kind!r}")

    if not base:
        raise ModelParseError("missing base record")
    if foot_joints is None or len(foot_joints) != 2:
        raise ModelParseError("missing or malformed foot record")
    missing = [k for k in KEYPOINT_ORDER if k not in keypoints]
    if missing:
        raise ModelParseError(f"missing keypoints: {missing}")

    names = [kv["name"] for _, kv in joints]
    idx = {n: i for i, n in enumerate(names)}
    J = len(names)

    def vec3(s):
        return np.array([float(x) for x in s.split(",")])

    parent = np.empty(J, dtype=int)
    axis = np.empty((J, 3))
    offset = np.empty((J, 3))
    q_min = np.empty(J)
    q_max = np.empty(J)
    torque = np.empty(J)
    default = np.empty(J)
    inertia = np.empty(J)
    kp = np.empty(J)
    kd = np.empty(J)
    group = []
    upper = np.zeros(J, dtype=bool)
    total_mass = float(base.get("mass", 0.0))
    for i, (lineno, kv) in enumerate(joints):
        try:
            p = kv["parent"]
            parent[i] = -1 if p == "base" else idx[p]
            axis[i] = _AXES[kv["axis"]]
            offset[i] = vec3(kv["offset"])
            q_min[i], q_max[i] = (float(x) for x in kv["limits"].split(","))
            torque[i] = float(kv["torque"])
            default[i] = float(kv.get("default", 0.0))
            inertia[i] = float(kv.get("inertia", 0.2))
            kp[i] = float(kv.get("kp", 40.0))
            kd[i] = float(kv.get("kd", 1.0))
            group.append(kv.get("group", "other"))
            upper[i] = kv.get("body", "lower") == "upper"
            total_mass += float(kv.get("mass", 0.0))
        except KeyError as exc:
            raise ModelParseError(f"line {lineno}: missing field {exc}")

    kp_joint = np.array([idx[keypoints[k]["joint"]] for k in KEYPOINT_ORDER], dtype=int)
    kp_offset = np.stack([vec3(keypoints[k].get("offset", "0,0,0")) for k in KEYPOINT_ORDER])
    contact_joint = np.array([idx[c["joint"]] for c in contacts], dtype=int)
    contact_offset = np.stack([vec3(c["offset"]) for c in contacts])
    contact_foot = np.array([int(c["foot"]) for c in contacts], dtype=int)

    return HumanoidModel(
        name=name,
        joint_names=names,
        parent=parent,
        axis=axis,
        offset=offset,
        q_min=q_min,
        q_max=q_max,
        torque_limit=torque,
        default_pose=default,
        joint_inertia=inertia,
        kp=kp,
        kd=kd,
        group=group,
        upper_body=upper,
        kp_joint=kp_joint,
        kp_offset=kp_offset,
        contact_joint=contact_joint,
        contact_offset=contact_offset,
        contact_foot=contact_foot,
        foot_joints=np.array([idx[f] for f in foot_joints], dtype=int),
        total_mass=total_mass,
        rot_inertia=float(base.get("inertia", 1.5)),
        nominal_height=float(base.get("nominal_height", 0.85)),
    )


_SHIPPED = ("g1_like_23dof", "h1_like_21dof", "test_12dof")


def load_model(name_or_path) -> HumanoidModel:
    """Load a shipped model by name or any HMODEL v1 file by path."""
    s = str(name_or_path)
    if s in _SHIPPED:
        text = (
            importlib.resources.files("wbtrack.sim")
            .joinpath(f"models/{s}.txt")
            .read_text()
        )
        return parse_model(text, name=s)
    with open(s) as fh:
        return parse_model(fh.read(), name=s)
