from .model import (
    HumanoidModel,
    ModelParseError,
    load_model,
    parse_model,
    KEYPOINT_ORDER,
    UPPER_KEYPOINTS,
    LOWER_KEYPOINTS,
)
from .physics import (
    GRAVITY,
    SIM_DT,
    DECIMATION,
    IntegrationFault,
    PhysicalParams,
    RandomizationRanges,
    SimState,
    pd_torques,
    randomize_params,
    reset_to_frame,
    step,
)
from .fk import forward_kinematics, keypoint_positions, keypoint_world, contact_points_world
from .backend import advance, backend_name

__all__ = [
    "HumanoidModel",
    "ModelParseError",
    "load_model",
    "parse_model",
    "KEYPOINT_ORDER",
    "UPPER_KEYPOINTS",
    "LOWER_KEYPOINTS",
    "GRAVITY",
    "SIM_DT",
    "DECIMATION",
    "IntegrationFault",
    "PhysicalParams",
    "RandomizationRanges",
    "SimState",
    "pd_torques",
    "randomize_params",
    "reset_to_frame",
    "step",
    "forward_kinematics",
    "keypoint_positions",
    "keypoint_world",
    "contact_points_world",
    "advance",
    "backend_name",
]
