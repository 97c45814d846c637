"""SE(3)/se(3) algebra used by every recursion.

Conventions (fixed across the whole package):
  * twists and wrenches are 6-vectors ordered (angular; linear),
  * the adjoint of a pose C = (R, x) is Ad_C = [[R, 0], [[x]R, R]],
  * the little adjoint of a twist g = (w, v) is ad_g = [[ [w],0 ],[ [v],[w] ]],
  * co-adjoints are plain transposes (Ad^T, ad^T), never separate types.

All operations are pure functions; they are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

_BINOM_MAX = 40
_BINOM_TABLE = np.zeros((_BINOM_MAX + 1, _BINOM_MAX + 1), dtype=np.int64)
for _n in range(_BINOM_MAX + 1):
    _BINOM_TABLE[_n, 0] = 1
    for _k in range(1, _n + 1):
        _BINOM_TABLE[_n, _k] = _BINOM_TABLE[_n - 1, _k - 1] \
            + _BINOM_TABLE[_n - 1, _k]


def binom(n: int, k: int) -> int:
    """Exact binomial coefficient from a precomputed Pascal table.

    Valid for 0 <= k <= n <= 40, which covers every derivative order the
    recursions support.
    """
    if not (0 <= k <= n <= _BINOM_MAX):
        raise ValueError(f"binom({n}, {k}) outside supported range "
                         f"0 <= k <= n <= {_BINOM_MAX}")
    return int(_BINOM_TABLE[n, k])


@dataclass(frozen=True)
class Pose:
    """Element of SE(3): rotation (3x3, orthonormal) and translation (m)."""

    rotation: np.ndarray
    translation: np.ndarray

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected 4x4 homogeneous matrix, got {m.shape}")
        return Pose(m[:3, :3].copy(), m[:3, 3].copy())

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "Pose":
        rt = self.rotation.T.copy()
        return Pose(rt, -rt @ self.translation)

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) \
            + self.translation

    def orthonormality_error(self) -> float:
        """max(|R^T R - I|, |det R - 1|), for invariant checks."""
        r = self.rotation
        return max(float(np.abs(r.T @ r - np.eye(3)).max()),
                   abs(float(np.linalg.det(r)) - 1.0))


def _as_matrix(pose) -> np.ndarray:
    if isinstance(pose, Pose):
        return pose.matrix()
    m = np.ascontiguousarray(pose, dtype=float)
    if m.shape != (4, 4):
        raise ValueError(f"expected Pose or 4x4 matrix, got shape {m.shape}")
    return m


def hat(w) -> np.ndarray:
    """Skew matrix of a 3-vector: hat(w) @ u == np.cross(w, u)."""
    w = np.asarray(w, dtype=float)
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def exp_se3(g, scale: float = 1.0) -> Pose:
    """Closed-form exponential exp([g] * scale) of a twist g = (w, v).

    Rodrigues formula with a series fallback when ||w * scale|| < 1e-8.
    """
    g = np.ascontiguousarray(g, dtype=float)
    if g.shape != (6,):
        raise ValueError(f"expected 6-vector twist, got shape {g.shape}")
    out = np.empty((4, 4))
    _kernels.exp_se3(g, float(scale), out)
    return Pose.from_matrix(out)


def adjoint(pose) -> np.ndarray:
    """Ad_C as a 6x6 matrix."""
    m = _as_matrix(pose)
    out = np.empty((6, 6))
    _kernels.adjoint_matrix(m, out)
    return out


def adjoint_inv(pose) -> np.ndarray:
    """Ad_{C^{-1}} without forming the inverse pose."""
    m = _as_matrix(pose)
    out = np.empty((6, 6))
    _kernels.adjoint_inv_matrix(m, out)
    return out


def little_adjoint(g) -> np.ndarray:
    """ad_g as a 6x6 matrix."""
    g = np.ascontiguousarray(g, dtype=float)
    out = np.empty((6, 6))
    _kernels.ad_matrix(g, out)
    return out


def bracket(g1, g2) -> np.ndarray:
    """Lie bracket [g1, g2] = ad_{g1} g2."""
    g1 = np.ascontiguousarray(g1, dtype=float)
    g2 = np.ascontiguousarray(g2, dtype=float)
    out = np.empty(6)
    _kernels.se3_bracket(g1, g2, out)
    return out


def adjoint_inv_transpose_derivs(pose, V_derivs, r: int) -> np.ndarray:
    """Time derivatives (Ad_{C^{-1}}^T)^(0..r) of a moving frame.

    ``V_derivs`` holds the spatial twist derivatives of the frame carried by
    the pose; orders 0..r-1 are consumed.  Row k of the result is the k-th
    derivative, so row 0 is adjoint_inv(pose).T and row 1 equals
    -ad^T_V Ad_{C^{-1}}^T.
    """
    V = np.atleast_2d(np.asarray(V_derivs, dtype=float))
    if r > 0 and V.shape[0] < r:
        raise ValueError(f"need twist derivatives 0..{r - 1}, "
                         f"got {V.shape[0]} rows")
    out = np.zeros((r + 1, 6, 6))
    out[0] = adjoint_inv(pose).T
    for k in range(1, r + 1):
        acc = np.zeros((6, 6))
        for m in range(k):
            acc -= binom(k - 1, m) * little_adjoint(V[m]).T @ out[k - 1 - m]
        out[k] = acc
    return out
