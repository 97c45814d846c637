import numpy as np
import pytest

from fbdyn.liegroup import (Pose, adjoint, adjoint_inv,
                            adjoint_inv_transpose_derivs, binom, bracket,
                            exp_se3, hat, little_adjoint)
from fbdyn.tilthex import ReferenceTrajectory


def test_hat_zero_and_basis():
    assert np.array_equal(hat([0.0, 0.0, 0.0]), np.zeros((3, 3)))
    assert np.array_equal(hat([0.0, 0.0, 1.0]),
                          np.array([[0.0, -1.0, 0.0],
                                    [1.0, 0.0, 0.0],
                                    [0.0, 0.0, 0.0]]))


def test_hat_cross_product_antisymmetry(rng):
    for _ in range(50):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        assert np.allclose(hat(a) @ b, np.cross(a, b), atol=1e-15)
        assert np.allclose(hat(a) @ b, -hat(b) @ a, atol=1e-15)


def test_exp_identity():
    p = exp_se3(np.zeros(6))
    assert np.allclose(p.matrix(), np.eye(4), atol=0.0)


def test_exp_rot_z_quarter_turn():
    p = exp_se3(np.array([0.0, 0.0, np.pi / 2, 0.0, 0.0, 0.0]))
    assert np.allclose(p.rotation @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                       atol=1e-15)
    assert np.allclose(p.translation, 0.0)


def test_exp_pure_translation():
    p = exp_se3(np.array([0.0, 0.0, 0.0, 1.0, 2.0, 3.0]))
    assert np.allclose(p.rotation, np.eye(3), atol=0.0)
    assert np.allclose(p.translation, [1.0, 2.0, 3.0], atol=0.0)


def test_exp_scale_matches_scaled_twist(rng):
    g = rng.standard_normal(6)
    assert np.allclose(exp_se3(g, 0.73).matrix(), exp_se3(0.73 * g).matrix(),
                       atol=1e-14)


def test_exp_small_angle_series_continuity():
    # straddle the series/Rodrigues switch at |w| = 1e-8
    g = np.array([1.0, -0.5, 0.25, 0.3, 0.2, 0.1])
    below = exp_se3(g, 0.9e-8).matrix()
    above = exp_se3(g, 1.1e-8).matrix()
    assert np.abs(below - above).max() < 1e-8


def test_exp_orthonormality_random(rng):
    worst = 0.0
    for _ in range(2000):
        g = rng.uniform(-1.0, 1.0, 6)
        g *= rng.uniform(0.0, 10.0) / max(np.linalg.norm(g), 1e-12)
        worst = max(worst, exp_se3(g).orthonormality_error())
    assert worst <= 1e-12


def test_adjoint_identity_and_block_structure(rng):
    assert np.array_equal(adjoint(Pose.identity()), np.eye(6))
    p = exp_se3(rng.standard_normal(6))
    ad = adjoint(p)
    assert np.array_equal(ad[:3, :3], p.rotation)
    assert np.array_equal(ad[3:, 3:], p.rotation)
    assert np.array_equal(ad[:3, 3:], np.zeros((3, 3)))
    assert np.allclose(ad[3:, :3], hat(p.translation) @ p.rotation)


def test_adjoint_composition_and_inverse(rng):
    for _ in range(20):
        c1 = exp_se3(rng.standard_normal(6))
        c2 = exp_se3(rng.standard_normal(6))
        assert np.abs(adjoint(c1 @ c2)
                      - adjoint(c1) @ adjoint(c2)).max() <= 1e-12
        assert np.abs(adjoint(c1) @ adjoint_inv(c1) - np.eye(6)).max() \
            <= 1e-12
        assert np.abs(adjoint_inv(c1) - adjoint(c1.inverse())).max() <= 1e-12


def test_little_adjoint_annihilates_itself(rng):
    for _ in range(50):
        v = rng.standard_normal(6)
        assert np.abs(little_adjoint(v) @ v).max() <= 1e-12


def test_little_adjoint_linearity(rng):
    g1, g2 = rng.standard_normal(6), rng.standard_normal(6)
    assert np.allclose(little_adjoint(g1 + g2),
                       little_adjoint(g1) + little_adjoint(g2), atol=0.0)
    assert np.allclose(little_adjoint(2.5 * g1), 2.5 * little_adjoint(g1),
                       atol=0.0)


def test_group_homomorphism(rng):
    for _ in range(20):
        c = exp_se3(rng.standard_normal(6))
        g1, g2 = rng.standard_normal(6), rng.standard_normal(6)
        lhs = adjoint(c) @ bracket(g1, g2)
        rhs = bracket(adjoint(c) @ g1, adjoint(c) @ g2)
        assert np.abs(lhs - rhs).max() <= 1e-12


def test_algebra_homomorphism(rng):
    g1, g2 = rng.standard_normal(6), rng.standard_normal(6)
    lhs = little_adjoint(bracket(g1, g2))
    rhs = little_adjoint(g1) @ little_adjoint(g2) \
        - little_adjoint(g2) @ little_adjoint(g1)
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_adjoint_inv_transpose_derivs_stationary(rng):
    c = exp_se3(rng.standard_normal(6))
    out = adjoint_inv_transpose_derivs(c, np.zeros((4, 6)), 4)
    assert np.allclose(out[0], adjoint_inv(c).T, atol=0.0)
    assert np.abs(out[1:]).max() == 0.0


def test_adjoint_inv_transpose_derivs_order1(rng):
    c = exp_se3(rng.standard_normal(6))
    v = rng.standard_normal((1, 6))
    out = adjoint_inv_transpose_derivs(c, v, 1)
    expect = -little_adjoint(v[0]).T @ adjoint_inv(c).T
    assert np.abs(out[1] - expect).max() <= 1e-14


def test_adjoint_inv_transpose_derivs_vs_finite_differences():
    # analytic pose trajectory: the aerial-manipulator base reference
    traj = ReferenceTrajectory()
    t0, h = 9.0, 1e-3
    coef = np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0
    offs = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])

    def stack(t, r):
        return adjoint_inv_transpose_derivs(
            traj.base_pose(t), traj.base_twist_derivs(t, max(r - 1, 0)), r)

    center = stack(t0, 3)
    for k in (1, 2, 3):
        approx = sum(c * stack(t0 + o * h, k - 1)[k - 1]
                     for c, o in zip(coef, offs)) / h
        err = np.abs(approx - center[k]).max() / np.abs(center[k]).max()
        assert err <= 1e-5


def test_adjoint_inv_transpose_derivs_stack_mismatch():
    with pytest.raises(ValueError):
        adjoint_inv_transpose_derivs(Pose.identity(), np.zeros((1, 6)), 3)


def test_binom_values_and_range():
    assert binom(5, 2) == 10
    assert binom(7, 0) == 1
    assert binom(4, 2) == 6
    assert binom(40, 20) == 137846528820
    for bad in ((2, 3), (-1, 0), (41, 1)):
        with pytest.raises(ValueError):
            binom(*bad)


def test_pose_compose_inverse_apply(rng):
    a = exp_se3(rng.standard_normal(6))
    b = exp_se3(rng.standard_normal(6))
    assert np.allclose((a @ b).matrix(), a.matrix() @ b.matrix(), atol=1e-14)
    assert np.allclose((a @ a.inverse()).matrix(), np.eye(4), atol=1e-14)
    pt = rng.standard_normal(3)
    assert np.allclose(a.apply(pt), (a.matrix() @ [*pt, 1.0])[:3],
                       atol=1e-14)
