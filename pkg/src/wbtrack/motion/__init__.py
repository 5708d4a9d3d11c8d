from .clip import (
    MotionFrame,
    MotionClip,
    ClipParseError,
    load_clip,
    save_clip,
    resample_clip,
    to_local_frame,
)
from .synth import SynthParams, synth_clip
from .curate import CurationConfig, CurationReport, curate_dataset

__all__ = [
    "MotionFrame",
    "MotionClip",
    "ClipParseError",
    "load_clip",
    "save_clip",
    "resample_clip",
    "to_local_frame",
    "SynthParams",
    "synth_clip",
    "CurationConfig",
    "CurationReport",
    "curate_dataset",
]
