"""Worked 12-DoF aerial-manipulator example: a fully-actuated tilted-rotor
hexacopter base carrying two 3R arms (7 bodies), with smooth reference
trajectories differentiable to arbitrary order and the rotor-geometry map.

Geometry and inertial defaults follow the simulation parameters of the
system this package was built around; the propeller tilt angles, arm length
and rotor coefficients have no published values and carry artifact defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .kinematics import MotionInput
from .liegroup import Pose, adjoint_inv
from .model import BodySpec, JointSpec, RobotModel, build_model, \
    inertia_matrix


def _d2r(x):
    return np.deg2rad(np.asarray(x, dtype=float))


@dataclass
class TiltHexParams:
    """Geometry, inertia and rotor parameters.

    b: vertical offset from the base CoM to the arm mounting plane (m)
    d: half link length (m); joints sit d above each link CoM
    c: lateral spacing between the two arms (m)
    alpha, beta: fixed rotor tilt angles (rad) -- artifact defaults
    arm_a: distance from base CoM to each rotor (m) -- artifact default
    c_f, c_d: rotor thrust/drag coefficients -- artifact defaults
    """

    b: float = 0.10
    d: float = 0.06
    c: float = 0.18
    m_base: float = 2.5
    J_base: np.ndarray = field(
        default_factory=lambda: np.diag([0.03, 0.03, 0.05]))
    m_link: float = 0.25
    J_link: np.ndarray = field(
        default_factory=lambda: np.diag([0.002, 0.002, 0.001]))
    alpha: float = np.deg2rad(20.0)
    beta: float = np.deg2rad(10.0)
    arm_a: float = 0.3
    c_f: float = 1e-3
    c_d: float = 1e-5
    gravity: float = 9.81

    @property
    def total_mass(self) -> float:
        return self.m_base + 6.0 * self.m_link


# joint axes in the (identically oriented) child body frames at home:
# shoulder pitch about y, elbow roll about x, wrist yaw about z, per arm
_AXES = {
    2: (0.0, 1.0, 0.0), 5: (0.0, 1.0, 0.0),
    3: (1.0, 0.0, 0.0), 6: (1.0, 0.0, 0.0),
    4: (0.0, 0.0, 1.0), 7: (0.0, 0.0, 1.0),
}


def build_tilthex(params: TiltHexParams | None = None) -> RobotModel:
    """Tree: base 1 with children {2, 5}; chains 1-2-3-4 and 1-5-6-7.

    Arm roots hang (b+d) below the base CoM, offset +-c/2 along x; each
    further link sits 2d below its parent.  Every joint's reference point is
    (0, 0, d) in the child frame (the joint is d above the link CoM).
    """
    p = params if params is not None else TiltHexParams()
    specs = [BodySpec(id=1, parent=0, A_parent_child=Pose.identity(),
                      inertia_body=inertia_matrix(p.m_base, p.J_base))]
    point = np.array([0.0, 0.0, p.d])
    link_inertia = inertia_matrix(p.m_link, p.J_link)
    for bid in range(2, 8):
        if bid in (2, 5):
            parent = 1
            sign = 1.0 if bid == 2 else -1.0
            xyz = np.array([sign * p.c / 2.0, 0.0, -(p.b + p.d)])
        else:
            parent = bid - 1
            xyz = np.array([0.0, 0.0, -2.0 * p.d])
        specs.append(BodySpec(
            id=bid, parent=parent,
            A_parent_child=Pose(np.eye(3), xyz),
            inertia_body=link_inertia,
            joint=JointSpec(kind="revolute", axis=np.array(_AXES[bid]),
                            point=point)))
    return build_model(specs, gravity=p.gravity)


def tilthex_model_path() -> str:
    """Path of the shipped model file (same content as build_tilthex())."""
    return str(resources.files("fbdyn").joinpath("data/tilthex.model"))


# ---------------------------------------------------------------------------
# reference trajectory (analytic derivatives to arbitrary order)
# ---------------------------------------------------------------------------

@dataclass
class ReferenceTrajectory:
    """Base circle + sinusoidal yaw, joints on half-cosine ramps.

    Base position runs a unit circle in the z=0 plane (center at the
    origin, phase 0 at t=0); yaw oscillates sinusoidally.  Joint j follows
    q_j(t) = q0_j + (eta_j / 2)(1 - cos(pi t / T)).  Everything is
    differentiated in closed form, so the emitted twist stacks are the exact
    spatial-twist derivatives of the pose trajectory.
    """

    radius: float = 1.0
    circle_rate: float = 2.0 * np.pi / 20.0     # rad/s
    yaw_amplitude: float = np.deg2rad(25.0)
    yaw_rate: float = 2.0 * np.pi / 30.0        # rad/s
    q0: np.ndarray = field(
        default_factory=lambda: _d2r([10.0, -5.0, 15.0, -10.0, 7.0, -12.0]))
    eta: np.ndarray = field(
        default_factory=lambda: _d2r([60.0, 50.0, 40.0, 55.0, 45.0, 35.0]))
    horizon: float = 30.0

    # all evaluators are vectorized over t (shape (...,) -> leading axes)

    def _position_derivs(self, t, r: int) -> np.ndarray:
        """x^(0..r), with x(t) = radius (cos wt, sin wt, 0)."""
        t = np.asarray(t, dtype=float)
        w = self.circle_rate
        out = np.zeros(t.shape + (r + 1, 3))
        for n in range(r + 1):
            ph = w * t + n * np.pi / 2.0
            out[..., n, 0] = self.radius * w**n * np.cos(ph)
            out[..., n, 1] = self.radius * w**n * np.sin(ph)
        return out

    def _yaw_derivs(self, t, r: int) -> np.ndarray:
        """psi^(0..r), with psi(t) = A sin(w t)."""
        t = np.asarray(t, dtype=float)
        w = self.yaw_rate
        out = np.zeros(t.shape + (r + 1,))
        for n in range(r + 1):
            out[..., n] = self.yaw_amplitude * w**n \
                * np.sin(w * t + n * np.pi / 2.0)
        return out

    def q_derivs(self, t, r: int) -> np.ndarray:
        """Joint stacks q^(0..r), shape (..., 6, r+1)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (6, r + 1))
        wt = np.pi / self.horizon
        out[..., :, 0] = self.q0 + 0.5 * np.multiply.outer(
            1.0 - np.cos(wt * t), self.eta)
        for n in range(1, r + 1):
            out[..., :, n] = -0.5 * wt**n * np.multiply.outer(
                np.cos(wt * t + n * np.pi / 2.0), self.eta)
        return out

    def base_pose_matrix(self, t) -> np.ndarray:
        """Homogeneous base pose(s), shape (..., 4, 4)."""
        t = np.asarray(t, dtype=float)
        psi = self._yaw_derivs(t, 0)[..., 0]
        out = np.zeros(t.shape + (4, 4))
        cy, sy = np.cos(psi), np.sin(psi)
        out[..., 0, 0] = cy
        out[..., 0, 1] = -sy
        out[..., 1, 0] = sy
        out[..., 1, 1] = cy
        out[..., 2, 2] = 1.0
        out[..., 3, 3] = 1.0
        out[..., :3, 3] = self._position_derivs(t, 0)[..., 0, :]
        return out

    def base_pose(self, t: float) -> Pose:
        return Pose.from_matrix(self.base_pose_matrix(float(t)))

    def base_twist_derivs(self, t, r: int) -> np.ndarray:
        """Spatial twist stack (V_1)^(0..r) of the base pose.

        With R = Rz(psi), the angular part is (0, 0, psi^(k+1)); the linear
        part v = xdot - w x x is expanded with Leibniz' rule.
        """
        t = np.asarray(t, dtype=float)
        x = self._position_derivs(t, r + 1)
        psi = self._yaw_derivs(t, r + 1)
        out = np.zeros(t.shape + (r + 1, 6))
        from .liegroup import binom
        for k in range(r + 1):
            out[..., k, 2] = psi[..., k + 1]
            out[..., k, 3:] = x[..., k + 1, :]
            for m in range(k + 1):
                # (0,0,w) x a = (-w a_y, w a_x, 0)
                c = binom(k, m)
                wz = psi[..., m + 1]
                out[..., k, 3] -= c * (-wz * x[..., k - m, 1])
                out[..., k, 4] -= c * (wz * x[..., k - m, 0])
        return out

    def motion_input(self, t: float, r: int) -> MotionInput:
        """MotionInput at motion order r: twist stacks 0..r, joint stacks
        0..r+1.  Raises for t outside [0, horizon]."""
        if not (0.0 <= t <= self.horizon):
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        return MotionInput(C0_1=self.base_pose(t),
                           V1_derivs=self.base_twist_derivs(t, r),
                           q_derivs=self.q_derivs(t, r + 1))


def eval_trajectory(t: float, r: int,
                    traj: ReferenceTrajectory | None = None) -> MotionInput:
    """Reference trajectory sample; analytic derivatives, no differencing."""
    return (traj or ReferenceTrajectory()).motion_input(t, r)


# ---------------------------------------------------------------------------
# propeller geometry
# ---------------------------------------------------------------------------

def _rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def _rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1.0, 0], [-s, 0, c]])


def _rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def propeller_allocation(params: TiltHexParams | None = None) -> np.ndarray:
    """6x6 map from squared rotor speeds to the body-frame base wrench.

    Rotor i sits at C_Rz((2-i) pi/3) C_Tx(a) C_Rx(s_i alpha) C_Ry(beta)
    relative to the base, with the radial tilt sign s_i = (-1)^i
    alternating around the hexagon (rotor handedness, and with it the drag
    torque sign, alternates the same way).  Column i is the Ad^{-T} image
    of the local wrench (0, 0, s_i c_d, 0, 0, c_f) w_i^2.

    The alternation is what makes the map rank 6 for generic nonzero tilt
    angles (full actuation); a uniform tilt would leave every column on one
    rotation orbit and cap the rank at four.  Columns two apart remain
    related by the R_z(2 pi/3) block rotation.  c_f / c_d may be scalars or
    per-rotor 6-vectors (magnitudes; the handedness sign is applied here).
    """
    p = params if params is not None else TiltHexParams()
    cf = np.broadcast_to(np.asarray(p.c_f, dtype=float), (6,))
    cd = np.broadcast_to(np.asarray(p.c_d, dtype=float), (6,))
    out = np.zeros((6, 6))
    for i in range(1, 7):
        si = -1.0 if i % 2 else 1.0
        rz = _rot_z((2 - i) * np.pi / 3.0)
        rot = rz @ _rot_x(si * p.alpha) @ _rot_y(p.beta)
        xyz = rz @ np.array([p.arm_a, 0.0, 0.0])
        local = np.array([0.0, 0.0, si * cd[i - 1], 0.0, 0.0, cf[i - 1]])
        out[:, i - 1] = adjoint_inv(Pose(rot, xyz)).T @ local
    return out
