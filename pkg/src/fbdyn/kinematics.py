"""Higher-order forward kinematics and the per-body derivative quantities.

``forward_kinematics`` runs the pre-order sweep: accumulated exponentials
F_j, poses C_j = F_j A0_j, instantaneous screws S_j = Ad_{F_j} Y_j with all
their time derivatives, twist derivative stacks, spatial inertia stacks,
momenta and the bias terms.  The standalone functions below compute the same
per-body quantities one at a time in plain numpy; they define the formulas
the compiled sweep must agree with and are handy for tests and small scripts.

Order bookkeeping: a cache filled at *motion order* R carries twist
derivatives (V)^(0..R), screw stacks S^(0..R+1), inertia stacks M^(0..R+1),
bias stacks through order R+1 and momenta Pi^(0..R).  Inverse dynamics at
order r needs a cache of motion order r+1 (its top momentum derivative);
forward dynamics starts from motion order 0 and extends the cache itself,
writing the solved twist derivatives into the reserved top slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .liegroup import Pose, adjoint, adjoint_inv, \
    adjoint_inv_transpose_derivs, binom, little_adjoint, _as_matrix
from .model import RobotModel


@dataclass
class MotionInput:
    """Base pose, base twist derivative stack 0..r and joint variable
    derivative stacks 0..r+1 (one row per joint, ordered by child body id).
    """

    C0_1: Pose
    V1_derivs: np.ndarray     # (r+1, 6)
    q_derivs: np.ndarray      # (njoints, r+2)

    def __post_init__(self):
        if isinstance(self.C0_1, np.ndarray):
            self.C0_1 = Pose.from_matrix(self.C0_1)
        self.V1_derivs = np.atleast_2d(
            np.asarray(self.V1_derivs, dtype=float))
        self.q_derivs = np.atleast_2d(np.asarray(self.q_derivs, dtype=float))
        if self.q_derivs.shape[1] != self.V1_derivs.shape[0] + 1:
            raise ValueError(
                f"stack sizes inconsistent: base twist derivatives 0..r need "
                f"joint derivatives 0..r+1, got {self.V1_derivs.shape[0]} "
                f"twist rows and {self.q_derivs.shape[1]} joint columns")

    @property
    def order(self) -> int:
        return self.V1_derivs.shape[0] - 1


class KinematicsCache:
    """Workspace + results of the kinematics sweep for one state.

    Public arrays (0-based body axis, row j <-> body id j+1):
      C, F      (N, 4, 4)   poses and accumulated exponentials
      S         (N, cap+3, 6)    screw derivative stacks (base row zero)
      V         (N, cap+3, 6)    twist derivative stacks
      M         (N, cap+3, 6, 6) spatial inertia stacks
      Vbias, Pibias, Pi (N, cap+3, 6)
      q         (N, cap+3)  joint variable derivative stacks (base row zero)

    ``order`` is the motion order currently filled.  The capacity is fixed
    at allocation so the dynamics drivers can reuse one cache across calls
    without reallocating.
    """

    def __init__(self, model: RobotModel, capacity: int):
        n = model.nbodies
        self.model = model
        self.capacity = int(capacity)
        self.order = -1
        ns = self.capacity + 3
        self.F = np.zeros((n, 4, 4))
        self.C = np.zeros((n, 4, 4))
        self.S = np.zeros((n, ns, 6))
        self.V = np.zeros((n, ns, 6))
        self.M = np.zeros((n, ns, 6, 6))
        self.Vbias = np.zeros((n, ns, 6))
        self.Pibias = np.zeros((n, ns, 6))
        self.Pi = np.zeros((n, ns, 6))
        self.q = np.zeros((n, ns))
        self._scratch = np.zeros((6, 6, 6))

    def pose(self, body_id: int) -> Pose:
        return Pose.from_matrix(self.C[body_id - 1])

    def fill(self, minput: MotionInput, order: int) -> "KinematicsCache":
        model = self.model
        if minput.order < order:
            raise ValueError(
                f"motion input holds orders 0..{minput.order}, "
                f"need 0..{order}")
        if order + 1 > self.capacity + 2:
            raise ValueError(f"cache capacity {self.capacity} too small for "
                             f"motion order {order}")
        if minput.q_derivs.shape[0] != model.njoints:
            raise ValueError(
                f"expected {model.njoints} joint stacks, "
                f"got {minput.q_derivs.shape[0]}")
        self.q[:] = 0.0
        self.q[1:, :order + 2] = minput.q_derivs[:, :order + 2]
        _kernels.fk_fill(
            model.parent, model.preorder, model.A0, model.Y, model.M_body,
            minput.C0_1.matrix(), minput.V1_derivs, self.q, order,
            self.F, self.C, self.S, self.V, self.M, self.Vbias,
            self.Pibias, self.Pi, self._scratch)
        self.order = order
        return self


def forward_kinematics(model: RobotModel, minput: MotionInput,
                       order: int | None = None,
                       cache: KinematicsCache | None = None
                       ) -> KinematicsCache:
    """Run the higher-order kinematics sweep at the given motion order.

    Passing an existing ``cache`` (of sufficient capacity) reuses its
    arrays; otherwise one is allocated.
    """
    if order is None:
        order = minput.order
    if cache is None:
        cache = KinematicsCache(model, capacity=order)
    return cache.fill(minput, order)


# ---------------------------------------------------------------------------
# per-body quantities, one at a time
# ---------------------------------------------------------------------------

def spatial_inertia_derivs(M_body, C0, V_derivs, r: int) -> np.ndarray:
    """Derivatives of the spatial inertia M^(0..r).

    M^(0) = Ad_{C^{-1}}^T Mb Ad_{C^{-1}} and each following order is the
    Leibniz sum -sum_k binom(r-1,k) (M^(r-1-k) ad_{V^(k)} + transpose),
    consuming twist derivatives through order r-1.  Every order is
    symmetric.
    """
    ai = adjoint_inv(C0)
    V = np.atleast_2d(np.asarray(V_derivs, dtype=float))
    out = np.zeros((r + 1, 6, 6))
    out[0] = ai.T @ np.asarray(M_body, dtype=float) @ ai
    for rr in range(1, r + 1):
        acc = np.zeros((6, 6))
        for k in range(rr):
            x = out[rr - 1 - k] @ little_adjoint(V[k])
            acc -= binom(rr - 1, k) * (x + x.T)
        out[rr] = acc
    return out


def momentum_derivs(M_derivs, V_derivs, r: int) -> np.ndarray:
    """Pi^(r) = sum_k binom(r,k) M^(r-k) V^(k)."""
    M = np.asarray(M_derivs, dtype=float)
    V = np.atleast_2d(np.asarray(V_derivs, dtype=float))
    out = np.zeros((r + 1, 6))
    for rr in range(r + 1):
        for k in range(rr + 1):
            out[rr] += binom(rr, k) * M[rr - k] @ V[k]
    return out


def gravity_wrench_derivs(M_derivs, g: float, r: int) -> np.ndarray:
    """W^(r) = M^(r) G0 with G0 = (0, 0, 0, 0, 0, -g)."""
    M = np.asarray(M_derivs, dtype=float)
    g0 = np.array([0.0, 0.0, 0.0, 0.0, 0.0, -float(g)])
    return np.stack([M[k] @ g0 for k in range(r + 1)])


def external_wrench_derivs(W_body_derivs, C0, V_derivs, r: int) -> np.ndarray:
    """Spatial derivatives of a wrench whose stack is given in the body frame.

    Order 0 maps through Ad_{C^{-1}}^T; order r >= 1 combines
    -ad^T_{V^(k)} (W^0)^(r-k-1) with (Ad_{C^{-1}}^T)^(k) (W^b)^(r-k).
    """
    Wb = np.atleast_2d(np.asarray(W_body_derivs, dtype=float))
    V = np.atleast_2d(np.asarray(V_derivs, dtype=float))
    adT = adjoint_inv_transpose_derivs(C0, V, r)
    out = np.zeros((r + 1, 6))
    out[0] = adT[0] @ Wb[0]
    for rr in range(1, r + 1):
        for k in range(rr):
            out[rr] += binom(rr - 1, k) * (
                adT[k] @ Wb[rr - k]
                - little_adjoint(V[k]).T @ out[rr - k - 1])
    return out


def bias_twist_derivs(S_derivs, q_derivs, r: int) -> np.ndarray:
    """V_bias^(r) = sum_{k=1}^{r} binom(r,k) S^(k) q^(r-k+1), the part of
    V^(r) - V_parent^(r) not attributable to S^(0) q^(r+1)."""
    S = np.atleast_2d(np.asarray(S_derivs, dtype=float))
    q = np.asarray(q_derivs, dtype=float).ravel()
    out = np.zeros((r + 1, 6))
    for rr in range(r + 1):
        for k in range(1, rr + 1):
            out[rr] += binom(rr, k) * q[rr - k + 1] * S[k]
    return out


def bias_momentum_derivs(M_derivs, V_derivs, r: int) -> np.ndarray:
    """Pi_bias^(r) = sum_{k=0}^{r-1} binom(r,k) M^(r-k) V^(k), so that
    Pi^(r) = M^(0) V^(r) + Pi_bias^(r) holds exactly."""
    M = np.asarray(M_derivs, dtype=float)
    V = np.atleast_2d(np.asarray(V_derivs, dtype=float))
    out = np.zeros((r + 1, 6))
    for rr in range(r + 1):
        for k in range(rr):
            out[rr] += binom(rr, k) * M[rr - k] @ V[k]
    return out


def screw_derivs(Y, V_derivs, F, r: int) -> np.ndarray:
    """S^(0) = Ad_F Y and S^(r) = sum binom(r-1,k) ad_{V^(k)} S^(r-1-k)."""
    V = np.atleast_2d(np.asarray(V_derivs, dtype=float))
    out = np.zeros((r + 1, 6))
    out[0] = adjoint(_as_matrix(F)) @ np.asarray(Y, dtype=float)
    for rr in range(1, r + 1):
        for k in range(rr):
            out[rr] += binom(rr - 1, k) * little_adjoint(V[k]) \
                @ out[rr - 1 - k]
    return out
