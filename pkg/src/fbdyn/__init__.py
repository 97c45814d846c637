"""Geometric recursive dynamics of floating-base kinematic trees, with
exact time derivatives of inverse, forward and hybrid dynamics to any
order.

Twists and wrenches are spatial (inertial-frame, right-invariant)
6-vectors ordered (angular; linear).  See the README for the conventions
and the CLI (``fbd``).
"""

from .liegroup import Pose, adjoint, adjoint_inv, \
    adjoint_inv_transpose_derivs, binom, bracket, exp_se3, hat, \
    little_adjoint
from .model import BodySpec, JointSpec, ModelError, RobotModel, \
    build_model, dumps_model, inertia_matrix, load_model, loads_model, \
    save_model, validate
from .kinematics import KinematicsCache, MotionInput, bias_momentum_derivs, \
    bias_twist_derivs, external_wrench_derivs, forward_kinematics, \
    gravity_wrench_derivs, momentum_derivs, spatial_inertia_derivs
from .inverse_dynamics import GeneralizedForces, LoadInput, \
    base_wrench_to_body_frame, hgrne
from .forward_dynamics import AccelOutput, ArticulatedState, \
    DegenerateJointError, SingularBaseError, articulated_inertia, hgabi
from .hybrid_dynamics import HybridOutput, HybridSpec, hghyb
from .closed_form import EomTerms, StackedOperators, assemble_operators, \
    coriolis_matrix, eom_order0, eom_order1, mass_matrix_dot, pose_derivs
from .tilthex import ReferenceTrajectory, TiltHexParams, build_tilthex, \
    eval_trajectory, propeller_allocation, tilthex_model_path

__version__ = "0.1.0"

__all__ = [
    "Pose", "adjoint", "adjoint_inv", "adjoint_inv_transpose_derivs",
    "binom", "bracket", "exp_se3", "hat", "little_adjoint",
    "BodySpec", "JointSpec", "ModelError", "RobotModel", "build_model",
    "dumps_model", "inertia_matrix", "load_model", "loads_model",
    "save_model", "validate",
    "KinematicsCache", "MotionInput", "bias_momentum_derivs",
    "bias_twist_derivs", "external_wrench_derivs", "forward_kinematics",
    "gravity_wrench_derivs", "momentum_derivs", "spatial_inertia_derivs",
    "GeneralizedForces", "LoadInput", "base_wrench_to_body_frame", "hgrne",
    "AccelOutput", "ArticulatedState", "DegenerateJointError",
    "SingularBaseError", "articulated_inertia", "hgabi",
    "HybridOutput", "HybridSpec", "hghyb",
    "EomTerms", "StackedOperators", "assemble_operators", "coriolis_matrix",
    "eom_order0", "eom_order1", "mass_matrix_dot", "pose_derivs",
    "ReferenceTrajectory", "TiltHexParams", "build_tilthex",
    "eval_trajectory", "propeller_allocation", "tilthex_model_path",
]
