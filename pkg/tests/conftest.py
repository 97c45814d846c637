import numpy as np
import pytest

from fbdyn.kinematics import MotionInput
from fbdyn.liegroup import exp_se3
from fbdyn.tilthex import ReferenceTrajectory, build_tilthex


@pytest.fixture(scope="session")
def tilthex_model():
    return build_tilthex()


@pytest.fixture(scope="session")
def traj():
    return ReferenceTrajectory()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_motion(model, r, rng, pose_scale=1.0, rate_scale=1.0):
    """Random state + derivative stacks for a model (generic test input)."""
    pose = exp_se3(rng.uniform(-1.0, 1.0, 6) * pose_scale)
    v1 = rng.uniform(-1.0, 1.0, (r + 1, 6)) * rate_scale
    q = rng.uniform(-1.0, 1.0, (model.njoints, r + 2)) * rate_scale
    return MotionInput(C0_1=pose, V1_derivs=v1, q_derivs=q)
