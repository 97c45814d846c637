"""Numerical audits: finite-difference derivative checks and the
inverse/forward round-trip experiment.

The stencil here is test infrastructure: it validates the analytic
derivative stacks, it is never a runtime fallback for them.  Errors are
reported as max|difference| / (1 + max|reference|) so quantities passing
through zero stay meaningful.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .forward_dynamics import hgabi
from .inverse_dynamics import LoadInput, hgrne
from .kinematics import forward_kinematics
from .model import RobotModel
from .tilthex import ReferenceTrajectory

# sixth-order central first-derivative stencil, offsets -3h..3h
_OFFSETS = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
_COEFFS = np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0


def fd6(f, t: float, h: float):
    """Sixth-order central difference of a vector-valued function."""
    acc = None
    for c, o in zip(_COEFFS, _OFFSETS):
        v = np.asarray(f(t + o * h), dtype=float) * c
        acc = v if acc is None else acc + v
    return acc / h


def fd6_richardson(f, t: float, h: float):
    """fd6 with one Richardson step-halving extrapolation."""
    d1 = fd6(f, t, h)
    d2 = fd6(f, t, h / 2.0)
    return (64.0 * d2 - d1) / 63.0


def rel_err(approx, exact) -> float:
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    return float(np.abs(approx - exact).max()
                 / (1.0 + np.abs(exact).max()))


# ---------------------------------------------------------------------------
# derivative-formula audit
# ---------------------------------------------------------------------------

def _constant_body_loads(model: RobotModel, r: int) -> np.ndarray:
    """Deterministic constant body-frame wrenches; their spatial stacks
    still vary with the motion, exercising the wrench-derivative path."""
    rng = np.random.default_rng(20260810)
    w = np.zeros((model.nbodies, r + 1, 6))
    w[:, 0, :] = rng.uniform(-1.0, 1.0, size=(model.nbodies, 6))
    return w


def fdcheck(model: RobotModel, traj: ReferenceTrajectory, r: int,
            step: float = 1e-3, t0: float | None = None) -> dict:
    """Compare every exported order-k stack against a sixth-order stencil
    applied to its order-(k-1) counterpart along the trajectory.

    Covers the kinematic stacks (S, V, M, Pi), the gravity and external
    wrench stacks, the inverse-dynamics outputs (Q, tau) and the forward
    dynamics outputs (qdd, base twist derivatives).  Returns a dict mapping
    quantity name to its worst relative error over orders 1..r.
    """
    if t0 is None:
        t0 = traj.horizon / 2.0
    span = 3.0 * step
    if not (0.0 <= t0 - span and t0 + span <= traj.horizon):
        raise ValueError(f"stencil window [{t0 - span}, {t0 + span}] leaves "
                         f"the trajectory domain [0, {traj.horizon}]")
    loads = _constant_body_loads(model, r)

    def sample(t):
        mi = traj.motion_input(t, r + 1)
        cache = forward_kinematics(model, mi, r + 1)
        forces = hgrne(model, cache,
                       LoadInput(W_app_derivs=loads, frame="body"), r=r)
        wapp_sp = _spatial_loads(model, cache, loads, r)
        fd = hgabi(model, mi.C0_1, mi.V1_derivs[0], mi.q_derivs[:, 0],
                   mi.q_derivs[:, 1], Wprop_derivs=forces.Q1_derivs,
                   tau_derivs=forces.tau_derivs,
                   W_app_derivs=loads, wapp_frame="body", r=r)
        g0 = np.array([0.0, 0.0, 0.0, 0.0, 0.0, -model.gravity])
        return {
            "S": cache.S[:, :r + 2].copy(),
            "V": cache.V[:, :r + 2].copy(),
            "M": cache.M[:, :r + 2].copy(),
            "Pi": cache.Pi[:, :r + 2].copy(),
            "W_grav": np.einsum("jkab,b->jka", cache.M[:, :r + 1], g0),
            "W_ext": wapp_sp,
            "Q1": forces.Q1_derivs,
            "tau": forces.tau_derivs,
            "qdd": fd.qdd_derivs,
            "V1_next": fd.V1_next_derivs,
        }

    nodes = {}
    for o in _OFFSETS:
        nodes[o] = sample(t0 + o * step)
    center = sample(t0)

    report: dict[str, float] = {}
    orders = {"S": r + 1, "V": r + 1, "M": r + 1, "Pi": r + 1,
              "W_grav": r, "W_ext": r, "Q1": r, "tau": r,
              "qdd": r, "V1_next": r}
    axis = {"S": 1, "V": 1, "M": 1, "Pi": 1, "W_grav": 1, "W_ext": 1,
            "Q1": 0, "tau": 1, "qdd": 1, "V1_next": 0}
    for name, kmax in orders.items():
        worst = 0.0
        ax = axis[name]
        for k in range(1, kmax + 1):
            acc = None
            for c, o in zip(_COEFFS, _OFFSETS):
                prev = np.take(nodes[o][name], k - 1, axis=ax)
                acc = c * prev if acc is None else acc + c * prev
            approx = acc / step
            exact = np.take(center[name], k, axis=ax)
            worst = max(worst, rel_err(approx, exact))
        report[name] = worst
    return report


def _spatial_loads(model, cache, loads_body, r):
    from .kinematics import external_wrench_derivs
    out = np.zeros_like(loads_body)
    for j in range(model.nbodies):
        out[j] = external_wrench_derivs(loads_body[j], cache.C[j],
                                        cache.V[j, :max(r, 1)], r)
    return out


# ---------------------------------------------------------------------------
# round-trip experiment
# ---------------------------------------------------------------------------

@dataclass
class RoundTripResult:
    """Per-order worst relative recovery errors of the inverse-forward
    round trip, plus wall-clock time."""

    order: int
    nsteps: int
    dt: float
    err_qdd: np.ndarray = field(default=None)
    err_v1: np.ndarray = field(default=None)
    elapsed_s: float = 0.0

    @property
    def max_err(self) -> float:
        return float(max(self.err_qdd.max(), self.err_v1.max()))

    def worst_order(self) -> int:
        k1 = int(self.err_qdd.argmax())
        k2 = int(self.err_v1.argmax())
        return k1 if self.err_qdd[k1] >= self.err_v1[k2] else k2

    def passed(self, tol: float = 1e-6) -> bool:
        return self.max_err <= tol


def run_roundtrip(model: RobotModel, traj: ReferenceTrajectory, r: int,
                  dt: float = 0.01, nsteps: int = 3000,
                  id_stacks=None) -> RoundTripResult:
    """Inverse dynamics along the trajectory, forward dynamics on its
    outputs, and the recovery error of q^(k+2) and (V_1)^(k+1), k = 0..r.

    The trajectory is sampled in one vectorized pass and both sweeps run
    through preallocated kernel calls, so the timed loop stays tight.
    ``id_stacks`` optionally replaces the freshly computed inverse-dynamics
    outputs: a sequence of (Q1_derivs, tau_derivs) per step, e.g. parsed
    back from a CSV, so corrupted inputs can be diagnosed.
    """
    from .bench import _FdCall, _IdCall
    nj = model.njoints
    ts = np.arange(nsteps) * dt
    if nsteps and ts[-1] > traj.horizon:
        raise ValueError(f"trajectory horizon {traj.horizon} s exceeded")
    poses = traj.base_pose_matrix(ts)
    Vst = traj.base_twist_derivs(ts, r + 1)
    qst = traj.q_derivs(ts, r + 2)
    idc = _IdCall(model, r)
    fdc = _FdCall(model, r)
    qdd_out = np.empty((nsteps, nj, r + 1))
    v1_out = np.empty((nsteps, r + 1, 6))
    start = time.perf_counter()
    for i in range(nsteps):
        fdc.C01[:] = poses[i]
        fdc.V1_0[0] = Vst[i, 0]
        fdc.q[1:, 0] = qst[i, :, 0]
        fdc.q[1:, 1] = qst[i, :, 1]
        if id_stacks is None:
            idc.C01[:] = poses[i]
            idc.V1[:] = Vst[i]
            idc.q[1:, :r + 3] = qst[i]
            idc()
            fdc.wprop[:] = idc.Q1
            fdc.tau[1:] = idc.tau[1:]
        else:
            q1, tau = id_stacks[i]
            fdc.wprop[:] = q1
            fdc.tau[1:] = tau
        fdc()
        qdd_out[i] = fdc.q[1:, 2:r + 3]
        v1_out[i] = fdc.cache.V[0, 1:r + 2]
    elapsed = time.perf_counter() - start
    truth_q = qst[:, :, 2:r + 3]
    truth_v = Vst[:, 1:r + 2]
    num_q = np.abs(qdd_out - truth_q).max(axis=1)
    den_q = 1.0 + np.abs(truth_q).max(axis=1)
    num_v = np.abs(v1_out - truth_v).max(axis=2)
    den_v = 1.0 + np.abs(truth_v).max(axis=2)
    return RoundTripResult(order=r, nsteps=nsteps, dt=dt,
                           err_qdd=(num_q / den_q).max(axis=0),
                           err_v1=(num_v / den_v).max(axis=0),
                           elapsed_s=elapsed)
