"""Closed-form equation-of-motion assembly (orders 0 and 1) and the
admissible Coriolis matrix.

Dense O(N^2) assembly over boolean path matrices; intended for modest trees
(N up to a few tens) as a public API, a teaching aid and, above all, the
independent oracle the recursive sweeps are tested against: the stacked
residuals produced here must equal the recursive generalized-force outputs
at orders 0 and 1.

The generalized velocity is nu = (V_1; qdot) with the *spatial base twist*
as its first block, not the matrix derivative of the base pose; when a
tangent-space pose derivative stack is needed, use ``pose_derivs``.

A note on the base block: the stacked screw matrix carries an identity
block for the base, whose true time derivative is zero.  Rewriting Sdot
products as block-diagonal adjoint products (as is customary for fixed-base
manipulators) silently adds ad_{V_1}-terms to the base rows; products with
the generalized velocity are unaffected (ad_V V = 0) but products with its
derivatives are not.  This module therefore uses the true derivative
operators Sdot, Sddot (base blocks zero) so the assembled residuals agree
with the recursive inverse dynamics in every row and at both orders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import KinematicsCache
from .liegroup import binom, hat, little_adjoint
from .model import RobotModel


@dataclass
class StackedOperators:
    """Dense stacked operators of one kinematic state.

    Gp/Gc: 6Nx6N boolean path matrices (block (i,j) of Gp is I6 iff body
    j+1 lies on the path from the base to body i+1, inclusive; Gc = Gp^T).
    S/Sdot: 6Nx(6+n) block-diagonal stacked screws (I6 base block; zero
    base block in Sdot).  Mblk: block-diagonal spatial inertias.
    nu/nudot/nuddot: generalized velocity stacks (V_1; qdot) etc.
    AdinvT: block-diagonal Ad_{C_j^{-1}}^T.  G0I: stacked gravity twist.
    V: the stacked body twists Gp S nu.
    """

    model: RobotModel
    Gp: np.ndarray
    Gc: np.ndarray
    S: np.ndarray
    Sdot: np.ndarray
    Sddot: np.ndarray
    Mblk: np.ndarray
    AdinvT: np.ndarray
    G0I: np.ndarray
    nu: np.ndarray
    nudot: np.ndarray
    nuddot: np.ndarray | None
    V: np.ndarray


@dataclass
class EomTerms:
    """Closed-form EoM pieces; residual0 = Mbar nudot + h + g + tau_ext
    equals the stacked order-0 generalized forces (base wrench; joint
    torques + external torques).  Order-1 fields are filled by
    ``eom_order1``."""

    Mbar: np.ndarray
    h: np.ndarray
    g: np.ndarray
    tau_ext: np.ndarray
    C: np.ndarray
    residual0: np.ndarray
    hdot_bar: np.ndarray | None = None
    gdot: np.ndarray | None = None
    tau_ext_dot: np.ndarray | None = None
    residual1: np.ndarray | None = None


def _blkad(x: np.ndarray) -> np.ndarray:
    """Block-diagonal little adjoint of a stacked 6N-vector."""
    nb = x.shape[0] // 6
    out = np.zeros((6 * nb, 6 * nb))
    for j in range(nb):
        out[6 * j:6 * j + 6, 6 * j:6 * j + 6] = little_adjoint(
            x[6 * j:6 * j + 6])
    return out


def assemble_operators(model: RobotModel, cache: KinematicsCache
                       ) -> StackedOperators:
    """Build the dense operators from a cache of motion order >= 1."""
    if cache.order < 1:
        raise ValueError("closed-form assembly needs motion order >= 1")
    nb = model.nbodies
    n = model.njoints
    Gp = np.zeros((6 * nb, 6 * nb))
    for i in range(nb):
        j = i
        while j >= 0:
            Gp[6 * i:6 * i + 6, 6 * j:6 * j + 6] = np.eye(6)
            j = model.parent[j]
    S = np.zeros((6 * nb, 6 + n))
    S[0:6, 0:6] = np.eye(6)
    for j in range(1, nb):
        S[6 * j:6 * j + 6, 6 + j - 1] = cache.S[j, 0]
    Mblk = np.zeros((6 * nb, 6 * nb))
    AdinvT = np.zeros((6 * nb, 6 * nb))
    from .liegroup import adjoint_inv
    for j in range(nb):
        Mblk[6 * j:6 * j + 6, 6 * j:6 * j + 6] = cache.M[j, 0]
        AdinvT[6 * j:6 * j + 6, 6 * j:6 * j + 6] = adjoint_inv(cache.C[j]).T
    G0I = np.tile([0.0, 0.0, 0.0, 0.0, 0.0, -model.gravity], nb)
    nu = np.concatenate([cache.V[0, 0], cache.q[1:, 1]])
    nudot = np.concatenate([cache.V[0, 1], cache.q[1:, 2]])
    nuddot = None
    if cache.order >= 2:
        nuddot = np.concatenate([cache.V[0, 2], cache.q[1:, 3]])
    V = Gp @ (S @ nu)
    # true stacked-screw derivatives: block j is ad_{V_j} S_j (and its
    # derivative); the base identity block is constant, so its rows are
    # zeroed rather than carrying ad_{V_1}
    adV = _blkad(V)
    Sdot = adV @ S
    Sdot[0:6, 0:6] = 0.0
    vdot = Gp @ (S @ nudot) + Gp @ (adV @ (S @ nu))
    Sddot = _blkad(vdot) @ S + adV @ Sdot
    Sddot[0:6, 0:6] = 0.0
    return StackedOperators(model=model, Gp=Gp, Gc=Gp.T, S=S, Sdot=Sdot,
                            Sddot=Sddot, Mblk=Mblk, AdinvT=AdinvT, G0I=G0I,
                            nu=nu, nudot=nudot, nuddot=nuddot, V=V)


def coriolis_matrix(ops: StackedOperators) -> np.ndarray:
    """C = S^T Gc M Gp Sdot - S^T Gc ad^T_V M Gp S; C nu reproduces the
    Coriolis/centrifugal vector h, and (1/2) Mbar_dot - C is skew."""
    adVT = _blkad(ops.V).T
    return (ops.S.T @ ops.Gc @ ops.Mblk @ ops.Gp @ ops.Sdot
            - ops.S.T @ ops.Gc @ adVT @ ops.Mblk @ ops.Gp @ ops.S)


def mass_matrix_dot(ops: StackedOperators) -> np.ndarray:
    """Mbar_dot assembled analytically from Sdot and the per-body inertia
    derivative Mdot_j = -(M_j ad_{V_j} + ad^T_{V_j} M_j)."""
    adV = _blkad(ops.V)
    Mdot = -(ops.Mblk @ adV + adV.T @ ops.Mblk)
    core = ops.Gc @ ops.Mblk @ ops.Gp
    return (ops.Sdot.T @ core @ ops.S
            + ops.S.T @ ops.Gc @ Mdot @ ops.Gp @ ops.S
            + ops.S.T @ core @ ops.Sdot)


def eom_order0(ops: StackedOperators, W_app_body=None) -> EomTerms:
    """Mass matrix, Coriolis/centrifugal vector, gravity and external-load
    vectors, and the order-0 residual Mbar nudot + h + g + tau_ext.

    ``W_app_body`` holds order-0 applied wrenches in the body frames,
    shape (N, 6).
    """
    S, Gc, Gp, M = ops.S, ops.Gc, ops.Gp, ops.Mblk
    adVT = _blkad(ops.V).T
    Mbar = S.T @ Gc @ M @ Gp @ S
    h = S.T @ Gc @ (M @ (Gp @ (ops.Sdot @ ops.nu))) \
        - S.T @ Gc @ (adVT @ (M @ ops.V))
    g = -S.T @ Gc @ (M @ ops.G0I)
    if W_app_body is None:
        tau_ext = np.zeros(S.shape[1])
    else:
        w0 = ops.AdinvT @ np.asarray(W_app_body, dtype=float).ravel()
        tau_ext = -S.T @ (Gc @ w0)
    res = Mbar @ ops.nudot + h + g + tau_ext
    return EomTerms(Mbar=Mbar, h=h, g=g, tau_ext=tau_ext,
                    C=coriolis_matrix(ops), residual0=res)


def eom_order1(ops: StackedOperators, W_app_body=None,
               W_app_body_dot=None) -> EomTerms:
    """Order-1 terms and residual Mbar nuddot + hdot_bar + gdot +
    tau_ext_dot, equal to the stacked order-1 generalized forces.

    Needs nuddot in the operators (cache of motion order >= 2).
    """
    if ops.nuddot is None:
        raise ValueError("order-1 assembly needs nuddot "
                         "(cache motion order >= 2)")
    terms = eom_order0(ops, W_app_body)
    S, Sdot, Sddot = ops.S, ops.Sdot, ops.Sddot
    Gc, Gp, M = ops.Gc, ops.Gp, ops.Mblk
    nu, nudot, nuddot = ops.nu, ops.nudot, ops.nuddot
    V = ops.V
    adV = _blkad(V)
    adVT = adV.T
    # first and second twist/inertia derivatives, assembled densely
    vdot = Gp @ (S @ nudot + Sdot @ nu)
    vddot = Gp @ (S @ nuddot + 2.0 * (Sdot @ nudot) + Sddot @ nu)
    M1 = -(M @ adV + adVT @ M)
    advd = _blkad(vdot)
    M2 = -(M1 @ adV + adVT @ M1) - (M @ advd + advd.T @ M)
    Pi1 = M @ vdot - adVT @ (M @ V)
    Pi2 = Gc @ (M2 @ V + 2.0 * (M1 @ vdot) + M @ vddot)
    Pi2_tilde = Pi2 - Gc @ (M @ (Gp @ (S @ nuddot)))

    hdot_bar = Sdot.T @ (Gc @ Pi1) + S.T @ Pi2_tilde
    gdot = -Sdot.T @ (Gc @ (M @ ops.G0I)) \
        + S.T @ (Gc @ ((M @ adV + adVT @ M) @ ops.G0I))
    if W_app_body is None and W_app_body_dot is None:
        tau_ext_dot = np.zeros(S.shape[1])
    else:
        nb = ops.model.nbodies
        wb = np.zeros(6 * nb) if W_app_body is None \
            else np.asarray(W_app_body, dtype=float).ravel()
        wbd = np.zeros(6 * nb) if W_app_body_dot is None \
            else np.asarray(W_app_body_dot, dtype=float).ravel()
        tau_ext_dot = -Sdot.T @ (Gc @ (ops.AdinvT @ wb)) \
            + S.T @ (Gc @ (adVT @ (ops.AdinvT @ wb))) \
            - S.T @ (Gc @ (ops.AdinvT @ wbd))
    res1 = terms.Mbar @ nuddot + hdot_bar + gdot + tau_ext_dot
    terms.hdot_bar = hdot_bar
    terms.gdot = gdot
    terms.tau_ext_dot = tau_ext_dot
    terms.residual1 = res1
    return terms


def pose_derivs(C0, V_derivs, r: int) -> np.ndarray:
    """Tangent-space derivatives of a pose from its spatial twist stacks.

    C^(r) = sum_{k=0}^{r-1} binom(r-1,k) [V^(k)] C^(r-1-k) as 4x4 matrices
    (the generalized-velocity stacks carry twists, not matrix derivatives;
    this lifts them back when a chart-free pose derivative is wanted).
    """
    from .liegroup import _as_matrix
    V = np.atleast_2d(np.asarray(V_derivs, dtype=float))
    out = np.zeros((r + 1, 4, 4))
    out[0] = _as_matrix(C0)
    for rr in range(1, r + 1):
        for k in range(rr):
            vk = np.zeros((4, 4))
            vk[:3, :3] = hat(V[k, :3])
            vk[:3, 3] = V[k, 3:]
            out[rr] += binom(rr - 1, k) * vk @ out[rr - 1 - k]
    return out
