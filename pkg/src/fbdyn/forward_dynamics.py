"""Higher-order articulated-body forward dynamics.

The articulated inertia of each subtree is assembled once per state; it is
the leading coefficient of the transmitted wrench at *every* derivative
order, so the same matrices (and the LDL^T factorization of the base block)
are reused across the whole order loop.  Each pass k solves for the base
twist derivative (V_1)^(k+1) and the joint quantities q^(k+2), appends them
to the motion stacks and extends the kinematics cache one order before the
next pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kinematics import KinematicsCache
from .liegroup import Pose
from .model import RobotModel

FRAME_BODY = "body"
FRAME_SPATIAL = "spatial"


class DegenerateJointError(RuntimeError):
    """S^T M^A S fell below threshold for some joint (reported by body id)."""

    def __init__(self, body_id: int):
        self.body_id = body_id
        super().__init__(
            f"degenerate joint inertia at body {body_id}: "
            f"S^T M^A S < {_kernels.DEGENERATE_EPS:g}")


class SingularBaseError(RuntimeError):
    def __init__(self):
        super().__init__("base articulated inertia is singular")


def _raise_status(st: int):
    if st < 0:
        raise DegenerateJointError(-st + 1)
    if st == _kernels.ERR_SINGULAR_BASE:
        raise SingularBaseError()


@dataclass
class ArticulatedState:
    """Articulated inertias, per-joint projections and bias wrench stacks.

    MA depends only on the configuration and is shared by all derivative
    orders; WA_derivs[j, k] is the order-k articulated bias wrench.
    """

    MA: np.ndarray          # (N, 6, 6)
    D_inv: np.ndarray       # (njoints,)
    WA_derivs: np.ndarray   # (N, r+1, 6)


@dataclass
class AccelOutput:
    """Solved motion derivatives: V1_next_derivs[k] = (V_1)^(k+1) and
    qdd_derivs[:, k] = q^(k+2) for k = 0..r."""

    V1_next_derivs: np.ndarray      # (r+1, 6)
    qdd_derivs: np.ndarray          # (njoints, r+1)
    V_next_derivs: np.ndarray       # (N, r+1, 6)
    articulated: ArticulatedState
    base_wrench_derivs: np.ndarray  # (r+1, 6) spatial (echo or solved)

    @property
    def order(self) -> int:
        return self.V1_next_derivs.shape[0] - 1


def articulated_inertia(model: RobotModel, cache: KinematicsCache):
    """Articulated-body inertia M^A per body and (S^T M^A S)^{-1} per joint.

    M^A_j = M^0_j + sum over children i of
    M^A_i (I - S_i (S_i^T M^A_i S_i)^{-1} S_i^T M^A_i); configuration-only.
    """
    n = model.nbodies
    MA = np.zeros((n, 6, 6))
    U = np.zeros((n, 6))
    D = np.ones(n)
    mask = np.zeros(n, dtype=np.bool_)
    st = _kernels.articulated_inertia(model.parent, model.postorder,
                                      cache.S, cache.M, mask, MA, U, D)
    _raise_status(st)
    return MA, 1.0 / D[1:]


class _Workspace:
    """Scratch arrays for one articulated-dynamics call."""

    def __init__(self, n: int, r: int, wapp_mode: int):
        self.wapp_sp = np.zeros((n, r + 1, 6))
        self.MA = np.zeros((n, 6, 6))
        self.U = np.zeros((n, 6))
        self.D = np.ones(n)
        self.WA = np.zeros((n, r + 1, 6))
        self.Wjoint = np.zeros((n, r + 1, 6))
        self.qtil = np.zeros(n)
        self.Wprop_sp = np.zeros((r + 1, 6))
        self.Lb = np.zeros((6, 6))
        self.db = np.zeros(6)
        self.adTb = np.zeros((r + 1, 6, 6))
        self.adTall = np.zeros((n if wapp_mode == 2 else 1, r + 1, 6, 6))


def _stack_input(name, arr, shape):
    if arr is None:
        return np.zeros(shape)
    arr = np.ascontiguousarray(arr, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def _articulated_call(model, C0_1, V1_0, q, qdot, r, cache,
                      base_wrench, base_twist, base_mode, prop_frame_body,
                      tau_joints, tau_ext_derivs, W_app_derivs, wapp_frame,
                      jq_mask, q_presc):
    """Shared validation + kernel dispatch for forward and hybrid dynamics."""
    if isinstance(C0_1, np.ndarray):
        C0_1 = Pose.from_matrix(C0_1)
    n = model.nbodies
    nj = model.njoints
    q = np.asarray(q, dtype=float).ravel()
    qdot = np.asarray(qdot, dtype=float).ravel()
    if q.shape[0] != nj or qdot.shape[0] != nj:
        raise ValueError(f"expected {nj} joint positions/velocities, got "
                         f"{q.shape[0]}/{qdot.shape[0]}")
    if cache is None:
        cache = KinematicsCache(model, capacity=r)
    elif cache.capacity < r:
        raise ValueError(f"cache capacity {cache.capacity} < order {r}")
    cache.q[:] = 0.0
    cache.q[1:, 0] = q
    cache.q[1:, 1] = qdot

    tau = np.zeros((n, r + 1))
    tau[1:] = tau_joints
    tau_ext = np.zeros((n, r + 1))
    if tau_ext_derivs is not None:
        tau_ext[1:] = _stack_input("tau_ext_derivs", tau_ext_derivs,
                                   (nj, r + 1))
    if W_app_derivs is None:
        wapp = np.zeros((1, r + 1, 6))
        wapp_mode = 0
    else:
        wapp = _stack_input("W_app_derivs", W_app_derivs, (n, r + 1, 6))
        wapp_mode = 2 if wapp_frame == FRAME_BODY else 1

    V1_0 = np.asarray(V1_0, dtype=float).reshape(1, 6)
    ws = _Workspace(n, r, wapp_mode)
    st = _kernels.run_articulated(
        model.parent, model.preorder, model.postorder, model.A0, model.Y,
        model.M_body, model.gravity, C0_1.matrix(), V1_0, cache.q,
        base_wrench, base_twist, base_mode, prop_frame_body,
        tau, tau_ext, wapp, wapp_mode, jq_mask, q_presc, r,
        cache.F, cache.C, cache.S, cache.V, cache.M, cache.Vbias,
        cache.Pibias, cache.Pi, ws.wapp_sp, ws.MA, ws.U, ws.D, ws.WA,
        ws.Wjoint, ws.qtil, ws.Wprop_sp, ws.Lb, ws.db, ws.adTall, ws.adTb,
        cache._scratch)
    _raise_status(st)
    cache.order = 0  # top V slots now hold solved derivatives
    return cache, ws, tau


def hgabi(model: RobotModel, C0_1, V1_0, q, qdot, Wprop_derivs=None,
          tau_derivs=None, tau_ext_derivs=None, W_app_derivs=None,
          r: int = 0, prop_frame: str = FRAME_SPATIAL,
          wapp_frame: str = FRAME_BODY,
          cache: KinematicsCache | None = None) -> AccelOutput:
    """Forward dynamics and its time derivatives through order r.

    Inputs are the order-0 state (base pose, base twist, q, qdot) plus
    derivative stacks 0..r of the base propeller wrench (spatial unless
    ``prop_frame='body'``, in which case the conversion happens inside the
    order loop as the needed twist derivatives become available), actuation
    torques, external joint torques and applied body wrenches.  The
    generalized force driving each joint is tau + tau_ext.
    """
    nj = model.njoints
    tau_joints = _stack_input("tau_derivs", tau_derivs, (nj, r + 1))
    wprop = _stack_input("Wprop_derivs", Wprop_derivs, (r + 1, 6))
    n = model.nbodies
    cache, ws, _ = _articulated_call(
        model, C0_1, V1_0, q, qdot, r, cache,
        base_wrench=wprop, base_twist=np.zeros((r + 1, 6)), base_mode=0,
        prop_frame_body=(prop_frame == FRAME_BODY),
        tau_joints=tau_joints, tau_ext_derivs=tau_ext_derivs,
        W_app_derivs=W_app_derivs, wapp_frame=wapp_frame,
        jq_mask=np.zeros(n, dtype=np.bool_), q_presc=np.zeros((n, r + 1)))
    return AccelOutput(
        V1_next_derivs=cache.V[0, 1:r + 2].copy(),
        qdd_derivs=cache.q[1:, 2:r + 3].copy(),
        V_next_derivs=cache.V[:, 1:r + 2].copy(),
        articulated=ArticulatedState(MA=ws.MA.copy(), D_inv=1.0 / ws.D[1:],
                                     WA_derivs=ws.WA.copy()),
        base_wrench_derivs=ws.Wprop_sp.copy(),
    )
