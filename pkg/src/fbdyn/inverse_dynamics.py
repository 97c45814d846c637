"""Higher-order recursive inverse dynamics (backward sweep).

Given a kinematics cache holding twist derivatives through order r+1, the
backward pass produces, for every k = 0..r, the transmitted joint wrench
stacks, the base generalized wrench (equal to the required propeller wrench
in the spatial frame) and the joint torque stacks.

Sign convention, adopted verbatim from the recursion it implements:
tau_j^(k) = Q_j^(k) - tau_ext_j^(k), where Q is the generalized force
projected through the screw stacks and tau_ext collects non-conservative
external joint torques.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kinematics import KinematicsCache
from .liegroup import Pose, adjoint, adjoint_inv_transpose_derivs, binom, \
    little_adjoint
from .model import RobotModel

FRAME_BODY = "body"
FRAME_SPATIAL = "spatial"


@dataclass
class LoadInput:
    """Applied load derivative stacks for one dynamics call.

    W_app_derivs: per-body wrench stacks (N, r+1, 6); interpreted in the
    body-fixed frames when ``frame == 'body'`` (component-wise derivatives),
    or as spatial stacks when ``frame == 'spatial'``.  tau_ext_derivs:
    per-joint scalar stacks (njoints, r+1).  Either may be None.
    """

    W_app_derivs: np.ndarray | None = None
    tau_ext_derivs: np.ndarray | None = None
    frame: str = FRAME_BODY

    def __post_init__(self):
        if self.frame not in (FRAME_BODY, FRAME_SPATIAL):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.W_app_derivs is not None:
            self.W_app_derivs = np.asarray(self.W_app_derivs, dtype=float)
        if self.tau_ext_derivs is not None:
            self.tau_ext_derivs = np.asarray(self.tau_ext_derivs, dtype=float)

    def resolve(self, model: RobotModel, r: int):
        """Validated (wapp, mode, tau_ext) arrays for the kernels."""
        n = model.nbodies
        if self.W_app_derivs is None:
            wapp = np.zeros((1, r + 1, 6))
            mode = 0
        else:
            wapp = np.ascontiguousarray(self.W_app_derivs)
            if wapp.shape != (n, r + 1, 6):
                raise ValueError(
                    f"W_app_derivs must have shape ({n}, {r + 1}, 6), "
                    f"got {wapp.shape}")
            mode = 2 if self.frame == FRAME_BODY else 1
        tau_ext = np.zeros((n, r + 1))
        if self.tau_ext_derivs is not None:
            te = self.tau_ext_derivs
            if te.shape != (model.njoints, r + 1):
                raise ValueError(
                    f"tau_ext_derivs must have shape ({model.njoints}, "
                    f"{r + 1}), got {te.shape}")
            tau_ext[1:] = te
        return wapp, mode, tau_ext


@dataclass
class GeneralizedForces:
    """Output stacks of the backward sweep, orders 0..r.

    Q1_derivs: spatial base wrench stack (the propeller wrench derivatives).
    tau_derivs: per-joint torque stacks (njoints, r+1).
    W_joint_derivs: transmitted wrench stacks per body (diagnostics; row 0
    repeats the base wrench).
    """

    Q1_derivs: np.ndarray
    tau_derivs: np.ndarray
    W_joint_derivs: np.ndarray

    @property
    def order(self) -> int:
        return self.Q1_derivs.shape[0] - 1


def hgrne(model: RobotModel, cache: KinematicsCache,
          loads: LoadInput | None = None, r: int | None = None
          ) -> GeneralizedForces:
    """Backward recursion over the tree, all orders 0..r in one call.

    The cache must be filled to motion order r+1 (order-k output consumes
    the momentum derivative of order k+1).
    """
    if r is None:
        r = cache.order - 1
    if cache.order < r + 1:
        raise ValueError(
            f"cache holds motion order {cache.order}; inverse dynamics at "
            f"order {r} needs motion order {r + 1}")
    loads = loads if loads is not None else LoadInput()
    wapp, mode, tau_ext = loads.resolve(model, r)

    n = model.nbodies
    wapp_sp = np.zeros((n, r + 1, 6))
    W = np.zeros((n, r + 1, 6))
    Q1 = np.zeros((r + 1, 6))
    tau = np.zeros((n, r + 1))
    adT = np.zeros((r + 1, 6, 6))
    scratch = cache._scratch
    if mode == 2:
        for j in range(n):
            _kernels.wrench_body_to_spatial(
                cache.C[j], cache.V[j], wapp[j], r, wapp_sp[j], adT, scratch)
    elif mode == 1:
        wapp_sp[:] = wapp
    _kernels.id_backward(model.parent, model.postorder, cache.S, cache.M,
                         cache.Pi, wapp_sp, mode != 0, tau_ext,
                         model.gravity, r, W, Q1, tau)
    return GeneralizedForces(Q1_derivs=Q1, tau_derivs=tau[1:],
                             W_joint_derivs=W)


def base_wrench_to_body_frame(Q1_derivs, C0_1, V1_derivs, r: int
                              ) -> np.ndarray:
    """Map spatial base-wrench derivative stacks into the base body frame.

    Exact inverse of the body-to-spatial wrench conversion restricted to the
    base: order 0 is Ad_C^T Q, order 1 is Ad_C^T (ad_V^T Q + Qdot), and
    higher orders peel the leading term of that recursion.
    """
    Q = np.atleast_2d(np.asarray(Q1_derivs, dtype=float))
    V = np.atleast_2d(np.asarray(V1_derivs, dtype=float))
    if isinstance(C0_1, np.ndarray):
        C0_1 = Pose.from_matrix(C0_1)
    adT = adjoint_inv_transpose_derivs(C0_1, V, max(r - 1, 0))
    adC_T = adjoint(C0_1).T
    out = np.zeros((r + 1, 6))
    out[0] = adC_T @ Q[0]
    for rr in range(1, r + 1):
        rhs = Q[rr].copy()
        for k in range(rr):
            rhs += binom(rr - 1, k) * little_adjoint(V[k]).T @ Q[rr - k - 1]
        for k in range(1, rr):
            rhs -= binom(rr - 1, k) * adT[k] @ out[rr - k]
        out[rr] = adC_T @ rhs
    return out
