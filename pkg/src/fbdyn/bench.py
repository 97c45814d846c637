"""Benchmark harness: mean time per dynamics call over synthetic trees.

Trees replicate the aerial-manipulator family grown to ``branches`` chains
of ``n_bod`` links each (N = 1 + branches * n_bod bodies); link geometry
and inertia reuse the example's link values.  Inputs are drawn uniformly
from [-1, 1] per component, fixed by the seed; timing excludes model
construction and workspace allocation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kinematics import KinematicsCache
from .model import BodySpec, JointSpec, Pose, RobotModel, build_model, \
    inertia_matrix
from .tilthex import TiltHexParams

_AXES = (np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]),
         np.array([0.0, 0.0, 1.0]))


def make_branch_tree(n_bod: int, branches: int = 5,
                     params: TiltHexParams | None = None) -> RobotModel:
    """Base + ``branches`` serial chains of ``n_bod`` links each."""
    p = params if params is not None else TiltHexParams()
    specs = [BodySpec(id=1, parent=0, A_parent_child=Pose.identity(),
                      inertia_body=inertia_matrix(p.m_base, p.J_base))]
    link_inertia = inertia_matrix(p.m_link, p.J_link)
    point = np.array([0.0, 0.0, p.d])
    bid = 2
    for br in range(branches):
        root_x = (br - (branches - 1) / 2.0) * p.c
        parent = 1
        for depth in range(n_bod):
            if depth == 0:
                xyz = np.array([root_x, 0.0, -(p.b + p.d)])
            else:
                xyz = np.array([0.0, 0.0, -2.0 * p.d])
            specs.append(BodySpec(
                id=bid, parent=parent,
                A_parent_child=Pose(np.eye(3), xyz),
                inertia_body=link_inertia,
                joint=JointSpec(kind="revolute", axis=_AXES[depth % 3],
                                point=point)))
            parent = bid
            bid += 1
    return build_model(specs, gravity=p.gravity)


@dataclass
class BenchConfig:
    """One benchmark run: which algorithm, which sweep, sizes and orders."""

    algo: str = "id"                 # 'id' | 'fd'
    sweep: str = "over_N"            # 'over_N' | 'over_r'
    n_bod: tuple = (1, 2, 4, 8, 20, 40, 99)
    orders: tuple = (0, 1, 2, 3, 4, 5)
    branches: int = 5
    reps: int = 1000
    warmup: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.algo not in ("id", "fd"):
            raise ValueError(f"unknown algo {self.algo!r}")
        if self.sweep not in ("over_N", "over_r"):
            raise ValueError(f"unknown sweep {self.sweep!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")


@dataclass
class BenchRow:
    algo: str
    sweep: str
    N: int
    r: int
    reps: int
    mean_s: float
    std_s: float


class _IdCall:
    """Preallocated inverse-dynamics kernel call at order r.

    Mutate C01 / V1 / q (joint rows 1..N-1, derivative orders 0..r+2) in
    place between calls; results land in Q1 and tau.
    """

    def __init__(self, model: RobotModel, r: int):
        n = model.nbodies
        self.model = model
        self.r = r
        self.C01 = np.eye(4)
        self.V1 = np.zeros((r + 2, 6))
        self.q = np.zeros((n, r + 4))
        self.cache = KinematicsCache(model, capacity=r + 1)
        self.wapp = np.zeros((1, r + 1, 6))
        self.tau_ext = np.zeros((n, r + 1))
        self.W = np.zeros((n, r + 1, 6))
        self.Q1 = np.zeros((r + 1, 6))
        self.tau = np.zeros((n, r + 1))
        self.adT = np.zeros((r + 1, 6, 6))
        self.wapp_sp = np.zeros((n, r + 1, 6))

    def randomize(self, rng):
        self.V1[:] = rng.uniform(-1.0, 1.0, size=self.V1.shape)
        self.q[1:, :self.r + 3] = rng.uniform(
            -1.0, 1.0, size=(self.q.shape[0] - 1, self.r + 3))

    def __call__(self):
        m, c = self.model, self.cache
        _kernels.run_id(m.parent, m.preorder, m.postorder, m.A0, m.Y,
                        m.M_body, m.gravity, self.C01, self.V1, self.q,
                        self.wapp, 0, self.tau_ext, self.r,
                        c.F, c.C, c.S, c.V, c.M, c.Vbias, c.Pibias, c.Pi,
                        self.wapp_sp, self.W, self.Q1, self.tau,
                        self.adT, c._scratch)


class _FdCall:
    """Preallocated forward-dynamics kernel call at order r.

    Mutate C01, V1_0, the order-0/1 joint columns of q, and the input
    stacks wprop / tau between calls; solved derivatives land in
    q[:, 2:r+3] and cache.V[:, 1:r+2].
    """

    def __init__(self, model: RobotModel, r: int):
        n = model.nbodies
        self.model = model
        self.r = r
        self.C01 = np.eye(4)
        self.V1_0 = np.zeros((1, 6))
        self.q = np.zeros((n, r + 3))
        self.wprop = np.zeros((r + 1, 6))
        self.base_twist = np.zeros((r + 1, 6))
        self.tau = np.zeros((n, r + 1))
        self.tau_ext = np.zeros((n, r + 1))
        self.wapp = np.zeros((1, r + 1, 6))
        self.jq = np.zeros(n, dtype=np.bool_)
        self.q_presc = np.zeros((n, r + 1))
        self.cache = KinematicsCache(model, capacity=r)
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
        self.adTall = np.zeros((1, r + 1, 6, 6))

    def randomize(self, rng):
        self.q[1:, 0] = rng.uniform(-1.0, 1.0, size=self.q.shape[0] - 1)
        self.q[1:, 1] = rng.uniform(-1.0, 1.0, size=self.q.shape[0] - 1)

    def __call__(self):
        m, c = self.model, self.cache
        _kernels.run_articulated(
            m.parent, m.preorder, m.postorder, m.A0, m.Y, m.M_body,
            m.gravity, self.C01, self.V1_0, self.q,
            self.wprop, self.base_twist, 0, False,
            self.tau, self.tau_ext, self.wapp, 0, self.jq, self.q_presc,
            self.r, c.F, c.C, c.S, c.V, c.M, c.Vbias, c.Pibias, c.Pi,
            self.wapp_sp, self.MA, self.U, self.D, self.WA, self.Wjoint,
            self.qtil, self.Wprop_sp, self.Lb, self.db, self.adTall,
            self.adTb, c._scratch)


def time_call(call, reps: int, warmup: int = 5, blocks: int = 3):
    """(mean, std) seconds per call.

    Times ``blocks`` back-to-back windows of ``reps`` calls each
    (elapsed/reps per window) and reports the fastest window, which is the
    least-contended estimate; std is across windows.
    """
    for _ in range(warmup):
        call()
    means = np.empty(blocks)
    for b in range(blocks):
        t0 = time.perf_counter()
        for _ in range(reps):
            call()
        means[b] = (time.perf_counter() - t0) / reps
    return float(means.min()), float(means.std())


def run_bench(config: BenchConfig) -> list[BenchRow]:
    rng = np.random.default_rng(config.seed)
    rows: list[BenchRow] = []
    maker = _IdCall if config.algo == "id" else _FdCall
    if config.sweep == "over_N":
        points = [(nb, r) for r in config.orders for nb in config.n_bod]
    else:
        points = [(20, r) for r in config.orders]
    models: dict[int, RobotModel] = {}
    for nb, r in points:
        if nb not in models:
            models[nb] = make_branch_tree(nb, branches=config.branches)
        model = models[nb]
        call = maker(model, r)
        call.randomize(rng)
        mean_s, std_s = time_call(call, config.reps, config.warmup)
        rows.append(BenchRow(algo=config.algo, sweep=config.sweep,
                             N=model.nbodies, r=r, reps=config.reps,
                             mean_s=mean_s, std_s=std_s))
    return rows


def loglog_slope(ns, ts) -> float:
    """Least-squares slope of log(t) against log(n)."""
    return float(np.polyfit(np.log(np.asarray(ns, dtype=float)),
                            np.log(np.asarray(ts, dtype=float)), 1)[0])


def second_differences(ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    return ts[2:] - 2.0 * ts[1:-1] + ts[:-2]
