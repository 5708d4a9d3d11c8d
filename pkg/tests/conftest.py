import numpy as np
import pytest

from wbtrack.sim import load_model
from wbtrack.motion import SynthParams, synth_clip


@pytest.fixture(scope="session")
def test_model():
    return load_model("test_12dof")


@pytest.fixture(scope="session")
def g1_model():
    return load_model("g1_like_23dof")


@pytest.fixture(scope="session")
def h1_model():
    return load_model("h1_like_21dof")


@pytest.fixture(scope="session")
def stand_clip(test_model):
    return synth_clip("stand", SynthParams(model=test_model, duration=2.0), seed=0)


@pytest.fixture(scope="session")
def walk_clip(test_model):
    return synth_clip("walk", SynthParams(model=test_model, duration=4.0), seed=1)
