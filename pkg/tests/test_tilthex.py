import numpy as np
import pytest

from fbdyn.diagnostics import fd6, rel_err
from fbdyn.liegroup import hat
from fbdyn.tilthex import (TiltHexParams, build_tilthex, eval_trajectory,
                           propeller_allocation)


def test_default_parameters():
    p = TiltHexParams()
    assert (p.b, p.d, p.c) == (0.10, 0.06, 0.18)
    assert p.m_base == 2.5
    assert np.array_equal(p.J_base, np.diag([0.03, 0.03, 0.05]))
    assert p.m_link == 0.25
    assert np.array_equal(p.J_link, np.diag([0.002, 0.002, 0.001]))
    assert p.total_mass == 4.0


def test_topology_and_screws(tilthex_model):
    m = tilthex_model
    assert m.nbodies == 7
    assert m.children[0] == (1, 4)
    assert [m.parent[j] + 1 for j in range(1, 7)] == [1, 2, 3, 1, 5, 6]
    p = TiltHexParams()
    # Y2: axis y at p2 = A0_2 (0,0,d) = (c/2, 0, -b)
    p2 = np.array([p.c / 2, 0.0, -p.b])
    e2 = np.array([0.0, 1.0, 0.0])
    assert np.allclose(m.Y[1], np.concatenate([e2, np.cross(p2, e2)]),
                       atol=1e-15)
    # arm axes: y, x, z on each arm
    assert np.allclose(m.Y[2, :3], [1, 0, 0], atol=0.0)
    assert np.allclose(m.Y[3, :3], [0, 0, 1], atol=0.0)
    assert np.allclose(m.Y[4, :3], [0, 1, 0], atol=0.0)


def test_degenerate_geometry_collapses_to_origin():
    m = build_tilthex(TiltHexParams(b=0.0, d=0.0, c=0.0))
    assert np.abs(m.A_parent_child - np.eye(4)).max() == 0.0
    assert np.abs(m.A0 - np.eye(4)).max() == 0.0
    # all joint points coincide at the origin: screws are pure axes
    assert np.abs(m.Y[1:, 3:]).max() == 0.0


def test_trajectory_initial_values(traj):
    mi = eval_trajectory(0.0, 2, traj)
    assert np.allclose(mi.q_derivs[:, 0],
                       np.deg2rad([10.0, -5.0, 15.0, -10.0, 7.0, -12.0]),
                       atol=0.0)
    # half-cosine starts flat (cos(pi/2) rounding only)
    assert np.abs(mi.q_derivs[:, 1]).max() <= 1e-15
    assert np.allclose(mi.C0_1.translation, [1.0, 0.0, 0.0], atol=0.0)


def test_trajectory_out_of_range(traj):
    with pytest.raises(ValueError, match="outside"):
        eval_trajectory(31.0, 1, traj)
    with pytest.raises(ValueError, match="outside"):
        eval_trajectory(-0.5, 1, traj)


def test_twist_matches_pose_derivative(traj, rng):
    # [V] = Cdot C^{-1} at random times, Cdot from the stencil
    for t0 in rng.uniform(1.0, 29.0, 3):
        cdot = fd6(lambda t: traj.base_pose_matrix(float(t)), t0, 1e-3)
        c = traj.base_pose_matrix(t0)
        vhat = cdot @ np.linalg.inv(c)
        v = traj.base_twist_derivs(t0, 0)[0]
        expect = np.zeros((4, 4))
        expect[:3, :3] = hat(v[:3])
        expect[:3, 3] = v[3:]
        assert np.abs(vhat - expect).max() <= 1e-6


def test_twist_stacks_self_consistent(traj):
    t0, h = 16.0, 1e-3
    center = traj.base_twist_derivs(t0, 4)
    for k in (1, 2, 3, 4):
        approx = fd6(lambda t: traj.base_twist_derivs(float(t), k - 1)[k - 1],
                     t0, h)
        assert rel_err(approx, center[k]) <= 1e-6


def test_q_stacks_self_consistent(traj):
    t0, h = 6.0, 1e-3
    center = traj.q_derivs(t0, 4)
    for k in (1, 2, 3, 4):
        approx = fd6(lambda t: traj.q_derivs(float(t), k - 1)[:, k - 1],
                     t0, h)
        assert rel_err(approx, center[:, k]) <= 1e-6


def test_vectorized_trajectory_matches_scalar(traj):
    ts = np.array([0.0, 3.7, 14.2, 29.9])
    batch_v = traj.base_twist_derivs(ts, 3)
    batch_q = traj.q_derivs(ts, 3)
    batch_c = traj.base_pose_matrix(ts)
    for i, t in enumerate(ts):
        assert np.array_equal(batch_v[i], traj.base_twist_derivs(t, 3))
        assert np.array_equal(batch_q[i], traj.q_derivs(t, 3))
        assert np.array_equal(batch_c[i], traj.base_pose_matrix(t))


def test_allocation_untilted_collective_thrust():
    p = TiltHexParams(alpha=0.0, beta=0.0, c_d=0.0)
    A = propeller_allocation(p)
    assert np.allclose(A[3:5], 0.0, atol=1e-18)
    assert np.allclose(A[5], p.c_f, atol=1e-18)


def test_allocation_hexagonal_symmetry():
    # alternating tilt leaves a period-2 symmetry: columns two apart are
    # related by the R_z(2 pi/3) block rotation
    A = propeller_allocation()
    c, s = np.cos(-2 * np.pi / 3), np.sin(-2 * np.pi / 3)
    rz = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    blk = np.zeros((6, 6))
    blk[:3, :3] = rz
    blk[3:, 3:] = rz
    for i in range(4):
        assert np.abs(A[:, i + 2] - blk @ A[:, i]).max() <= 1e-15


def test_allocation_full_rank():
    A = propeller_allocation(TiltHexParams(alpha=np.deg2rad(20.0),
                                           beta=np.deg2rad(10.0),
                                           c_f=1e-3, c_d=1e-5))
    s = np.linalg.svd(A, compute_uv=False)
    assert np.linalg.matrix_rank(A) == 6
    assert s[-1] / s[0] > 1e-3


def test_allocation_rank_collapses_without_tilt():
    A = propeller_allocation(TiltHexParams(alpha=0.0, beta=0.0))
    assert np.linalg.matrix_rank(A) < 6
