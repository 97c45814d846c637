"""Higher-order hybrid dynamics: prescribed motion on some joints,
prescribed torques on the rest, with either the base wrench or the base
twist derivatives given.

Joints with prescribed motion contribute their full articulated inertia to
the parent (their acceleration is known), the torque-driven ones the
projected inertia.  The forward sweep then either copies the prescribed
accelerations or solves the joint, and emits torque stacks for the
prescribed-motion joints from the transmitted wrenches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forward_dynamics import FRAME_BODY, FRAME_SPATIAL, _articulated_call, \
    _stack_input
from .kinematics import KinematicsCache
from .model import RobotModel

WRENCH_GIVEN = "wrench_given"
TWIST_GIVEN = "twist_given"


@dataclass
class HybridSpec:
    """Partition of the joints and the base boundary condition.

    jq: body ids (2..N) whose joints have prescribed motion stacks
    q_presc_derivs[i, k] = q^(k+2) for jq[i].  jtau: body ids with
    prescribed torque stacks tau_presc_derivs.  The two sets must partition
    {2..N}.  base_mode selects which base quantity is given:
    'wrench_given' takes base_wrench_derivs (spatial) and solves the base
    twist derivatives; 'twist_given' takes base_twist_derivs[k] = (V_1)^(k+1)
    and returns the wrench stack.
    """

    jq: tuple = ()
    jtau: tuple = ()
    base_mode: str = WRENCH_GIVEN
    q_presc_derivs: np.ndarray | None = None
    tau_presc_derivs: np.ndarray | None = None
    base_wrench_derivs: np.ndarray | None = None
    base_twist_derivs: np.ndarray | None = None
    prop_frame: str = FRAME_SPATIAL

    def __post_init__(self):
        self.jq = tuple(int(j) for j in self.jq)
        self.jtau = tuple(int(j) for j in self.jtau)
        if self.base_mode not in (WRENCH_GIVEN, TWIST_GIVEN):
            raise ValueError(f"unknown base_mode {self.base_mode!r}")

    def check_partition(self, model: RobotModel):
        want = set(range(2, model.nbodies + 1))
        sq, st = set(self.jq), set(self.jtau)
        if sq & st:
            raise ValueError(f"joints in both sets: {sorted(sq & st)}")
        if sq | st != want:
            missing = sorted(want - (sq | st))
            extra = sorted((sq | st) - want)
            raise ValueError(
                f"jq and jtau must partition {{2..{model.nbodies}}}; "
                f"missing {missing}, unknown {extra}")


@dataclass
class HybridOutput:
    """Solved quantities: q^(k+2) on the torque-driven joints, torques on
    the prescribed-motion joints, the un-given base quantity and all body
    twist derivatives.  qdd_derivs covers every joint (prescribed rows echo
    the input)."""

    V1_next_derivs: np.ndarray       # (r+1, 6)
    qdd_derivs: np.ndarray           # (njoints, r+1)
    tau_jq_derivs: np.ndarray        # (len(jq), r+1), rows follow spec.jq
    base_wrench_derivs: np.ndarray   # (r+1, 6) spatial
    V_next_derivs: np.ndarray        # (N, r+1, 6)
    jq: tuple = field(default=())


def hghyb(model: RobotModel, C0_1, V1_0, q, qdot, spec: HybridSpec,
          tau_ext_derivs=None, W_app_derivs=None, r: int = 0,
          wapp_frame: str = FRAME_BODY,
          cache: KinematicsCache | None = None) -> HybridOutput:
    """Hybrid dynamics and its time derivatives through order r."""
    spec.check_partition(model)
    n = model.nbodies
    nj = model.njoints
    jq_mask = np.zeros(n, dtype=np.bool_)
    for j in spec.jq:
        jq_mask[j - 1] = True

    q_presc = np.zeros((n, r + 1))
    if spec.jq:
        qp = _stack_input("q_presc_derivs", spec.q_presc_derivs,
                          (len(spec.jq), r + 1))
        for i, j in enumerate(spec.jq):
            q_presc[j - 1] = qp[i]
    tau_joints = np.zeros((nj, r + 1))
    if spec.jtau:
        tp = _stack_input("tau_presc_derivs", spec.tau_presc_derivs,
                          (len(spec.jtau), r + 1))
        for i, j in enumerate(spec.jtau):
            tau_joints[j - 2] = tp[i]

    if spec.base_mode == WRENCH_GIVEN:
        base_wrench = _stack_input("base_wrench_derivs",
                                   spec.base_wrench_derivs, (r + 1, 6))
        base_twist = np.zeros((r + 1, 6))
        base_mode = 0
    else:
        base_wrench = np.zeros((r + 1, 6))
        base_twist = _stack_input("base_twist_derivs",
                                  spec.base_twist_derivs, (r + 1, 6))
        base_mode = 1

    cache, ws, tau = _articulated_call(
        model, C0_1, V1_0, q, qdot, r, cache,
        base_wrench=base_wrench, base_twist=base_twist, base_mode=base_mode,
        prop_frame_body=(spec.prop_frame == FRAME_BODY),
        tau_joints=tau_joints, tau_ext_derivs=tau_ext_derivs,
        W_app_derivs=W_app_derivs, wapp_frame=wapp_frame,
        jq_mask=jq_mask, q_presc=q_presc)
    tau_jq = np.stack([tau[j - 1] for j in spec.jq]) if spec.jq \
        else np.zeros((0, r + 1))
    return HybridOutput(
        V1_next_derivs=cache.V[0, 1:r + 2].copy(),
        qdd_derivs=cache.q[1:, 2:r + 3].copy(),
        tau_jq_derivs=tau_jq,
        base_wrench_derivs=ws.Wprop_sp.copy(),
        V_next_derivs=cache.V[:, 1:r + 2].copy(),
        jq=spec.jq,
    )
