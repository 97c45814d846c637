"""Command-line front end.

Subcommands: validate, id, fd, hybrid, roundtrip, bench, fdcheck.  CSV is
the output contract (UTF-8, '.' decimal, labeled header); --plot renders
matplotlib figures next to the CSV.  Exit codes: 0 success, 1 numerical
check failed, 2 I/O or parse failure.

Column naming: derivative stacks are labeled by true derivative order, so
``V1_3_wx`` is the x angular component of the third time derivative of the
base twist, ``q4_2`` the joint acceleration of the joint into body 4, and
``Q1_0_fz`` the vertical force of the (order-0) base wrench.

Trajectory inputs are either ``builtin:tilthex`` (analytic reference
trajectory, sampled at --dt over --steps) or a CSV with columns
``t, V1_{k}_{c}, q{j}_{k}`` carrying stacks through the motion order the
command needs (r+1 for inverse dynamics at order r); optional base-pose
columns ``C01_r00..C01_r22, C01_x, C01_y, C01_z`` default to the identity.
"""

from __future__ import annotations

import csv
import sys

import click
import numpy as np

from .bench import BenchConfig, run_bench
from .diagnostics import fdcheck as run_fdcheck
from .diagnostics import run_roundtrip
from .forward_dynamics import hgabi
from .hybrid_dynamics import HybridSpec, hghyb
from .inverse_dynamics import hgrne
from .kinematics import KinematicsCache, MotionInput, forward_kinematics
from .liegroup import Pose, hat
from .model import ModelError, load_model, validate
from .tilthex import ReferenceTrajectory

WRENCH_COMPS = ("mx", "my", "mz", "fx", "fy", "fz")
TWIST_COMPS = ("wx", "wy", "wz", "vx", "vy", "vz")


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load_model(path):
    try:
        return load_model(path)
    except OSError as exc:
        _fail(2, f"cannot read model file {path}: {exc}")
    except ModelError as exc:
        _fail(2, f"model file {path}: {exc}")


# ---------------------------------------------------------------------------
# trajectory sources
# ---------------------------------------------------------------------------

class _BuiltinTraj:
    def __init__(self, traj: ReferenceTrajectory, dt: float, steps: int):
        self.traj = traj
        self.dt = dt
        self.steps = steps

    def samples(self, motion_order: int):
        for i in range(self.steps):
            t = i * self.dt
            yield t, self.traj.motion_input(t, motion_order)


class _CsvTraj:
    def __init__(self, path, njoints: int):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(
                row for row in fh if not row.startswith("#"))
            self.rows = list(reader)
            self.fields = reader.fieldnames or []
        if not self.rows:
            raise ModelError("trajectory file has no data rows")
        self.njoints = njoints
        self.v_order = -1
        while f"V1_{self.v_order + 1}_wx" in self.fields:
            self.v_order += 1
        self.q_order = -1
        while f"q2_{self.q_order + 1}" in self.fields:
            self.q_order += 1
        self.has_pose = "C01_r00" in self.fields

    def order(self) -> int:
        return min(self.v_order, self.q_order - 1)

    def samples(self, motion_order: int):
        if self.order() < motion_order:
            raise ModelError(
                f"trajectory file carries motion order {self.order()}, "
                f"need {motion_order} (V1 stacks 0..{motion_order}, q "
                f"stacks 0..{motion_order + 1})")
        for row in self.rows:
            t = float(row["t"])
            V1 = np.array([[float(row[f"V1_{k}_{c}"]) for c in TWIST_COMPS]
                           for k in range(motion_order + 1)])
            q = np.array([[float(row[f"q{j + 2}_{k}"])
                           for k in range(motion_order + 2)]
                          for j in range(self.njoints)])
            if self.has_pose:
                rot = np.array([[float(row[f"C01_r{i}{j}"])
                                 for j in range(3)] for i in range(3)])
                xyz = np.array([float(row[f"C01_{c}"]) for c in "xyz"])
                pose = Pose(rot, xyz)
            else:
                pose = Pose.identity()
            yield t, MotionInput(C0_1=pose, V1_derivs=V1, q_derivs=q)


def _resolve_traj(traj_arg: str, model, dt: float, steps: int):
    if traj_arg.startswith("builtin:"):
        name = traj_arg.split(":", 1)[1]
        if name != "tilthex":
            _fail(2, f"unknown builtin trajectory {name!r}")
        if model.nbodies != 7:
            _fail(2, "builtin:tilthex expects the 7-body example model")
        return _BuiltinTraj(ReferenceTrajectory(), dt, steps)
    try:
        return _CsvTraj(traj_arg, model.njoints)
    except OSError as exc:
        _fail(2, f"cannot read trajectory {traj_arg}: {exc}")
    except (ModelError, KeyError, ValueError) as exc:
        _fail(2, f"trajectory {traj_arg}: {exc}")


def write_traj_csv(path, traj: ReferenceTrajectory, motion_order: int,
                   dt: float, steps: int, with_pose: bool = True):
    """Sample a reference trajectory into the CSV trajectory format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        hdr = ["t"]
        for k in range(motion_order + 1):
            hdr += [f"V1_{k}_{c}" for c in TWIST_COMPS]
        for j in range(6):
            hdr += [f"q{j + 2}_{k}" for k in range(motion_order + 2)]
        if with_pose:
            hdr += [f"C01_r{i}{j}" for i in range(3) for j in range(3)]
            hdr += ["C01_x", "C01_y", "C01_z"]
        writer.writerow(hdr)
        for i in range(steps):
            t = i * dt
            mi = traj.motion_input(t, motion_order)
            row = [f"{t:.10g}"]
            row += [repr(float(v)) for v in mi.V1_derivs.ravel()]
            row += [repr(float(v)) for v in mi.q_derivs.ravel()]
            if with_pose:
                row += [repr(float(v)) for v in mi.C0_1.rotation.ravel()]
                row += [repr(float(v)) for v in mi.C0_1.translation]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# main group
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Floating-base recursive dynamics with exact higher-order time
    derivatives."""


_model_opt = click.option("--model", "model_path", required=True,
                          type=click.Path(), help="model file")
_traj_opt = click.option("--traj", default="builtin:tilthex",
                         show_default=True,
                         help="trajectory CSV or builtin:tilthex")
_order_opt = click.option("--order", "-r", default=0, show_default=True,
                          help="derivative order r")
_out_opt = click.option("--out", "out_path", default=None,
                        help="output CSV path (default stdout)")
_dt_opt = click.option("--dt", default=0.01, show_default=True,
                       help="builtin trajectory sample period [s]")
_steps_opt = click.option("--steps", default=3000, show_default=True,
                          help="builtin trajectory sample count")
_plot_opt = click.option("--plot", is_flag=True,
                         help="render figures next to the CSV")


@main.command("validate")
@_model_opt
def cmd_validate(model_path):
    """Check a model file and report every invariant violation."""
    model = _load_model(model_path)
    issues = validate(model)
    if issues:
        for msg in issues:
            click.echo(f"INVALID: {msg}")
        sys.exit(1)
    click.echo(f"OK: {model.nbodies} bodies, {model.njoints} joints, "
               f"gravity {model.gravity} m/s^2")


def _open_out(out_path):
    if out_path is None:
        return sys.stdout, False
    return open(out_path, "w", newline="", encoding="utf-8"), True


@main.command("id")
@_model_opt
@_traj_opt
@_order_opt
@_out_opt
@_dt_opt
@_steps_opt
@_plot_opt
def cmd_id(model_path, traj, order, out_path, dt, steps, plot):
    """Inverse dynamics along a trajectory: base wrench and joint torque
    derivative stacks, one CSV row per timestep."""
    model = _load_model(model_path)
    source = _resolve_traj(traj, model, dt, steps)
    r = order
    cache = KinematicsCache(model, capacity=r + 1)
    fh, close = _open_out(out_path)
    ts, q1_rows, tau_rows = [], [], []
    try:
        writer = csv.writer(fh)
        hdr = ["t"]
        for k in range(r + 1):
            hdr += [f"Q1_{k}_{c}" for c in WRENCH_COMPS]
        for j in range(model.njoints):
            hdr += [f"tau{j + 2}_{k}" for k in range(r + 1)]
        writer.writerow(hdr)
        for t, mi in source.samples(r + 1):
            forward_kinematics(model, mi, r + 1, cache=cache)
            forces = hgrne(model, cache, r=r)
            row = [f"{t:.10g}"]
            row += [repr(float(v)) for v in forces.Q1_derivs.ravel()]
            row += [repr(float(v)) for v in forces.tau_derivs.ravel()]
            writer.writerow(row)
            ts.append(t)
            q1_rows.append(forces.Q1_derivs.copy())
            tau_rows.append(forces.tau_derivs.copy())
    except ModelError as exc:
        _fail(2, str(exc))
    finally:
        if close:
            fh.close()
    if plot and out_path:
        from .plotting import plot_order_stacks
        base = out_path.rsplit(".", 1)[0]
        plot_order_stacks(ts, np.stack(q1_rows), "base wrench derivatives",
                          base + "_wrench.png", WRENCH_COMPS)
        taus = np.stack(tau_rows).transpose(0, 2, 1)
        plot_order_stacks(ts, taus, "joint torque derivatives",
                          base + "_torques.png",
                          [f"q{j + 2}" for j in range(model.njoints)])


@main.command("fd")
@_model_opt
@_traj_opt
@_order_opt
@_out_opt
@_dt_opt
@_steps_opt
@_plot_opt
def cmd_fd(model_path, traj, order, out_path, dt, steps, plot):
    """Forward dynamics along a trajectory (driven by the wrench/torque
    stacks inverse dynamics produces): solved base twist and joint
    acceleration derivative stacks."""
    model = _load_model(model_path)
    source = _resolve_traj(traj, model, dt, steps)
    r = order
    cache_id = KinematicsCache(model, capacity=r + 1)
    cache_fd = KinematicsCache(model, capacity=r)
    fh, close = _open_out(out_path)
    ts, v_rows, q_rows = [], [], []
    try:
        writer = csv.writer(fh)
        hdr = ["t"]
        for k in range(1, r + 2):
            hdr += [f"V1_{k}_{c}" for c in TWIST_COMPS]
        for j in range(model.njoints):
            hdr += [f"q{j + 2}_{k}" for k in range(2, r + 3)]
        writer.writerow(hdr)
        for t, mi in source.samples(r + 1):
            forward_kinematics(model, mi, r + 1, cache=cache_id)
            forces = hgrne(model, cache_id, r=r)
            out = hgabi(model, mi.C0_1, mi.V1_derivs[0], mi.q_derivs[:, 0],
                        mi.q_derivs[:, 1], Wprop_derivs=forces.Q1_derivs,
                        tau_derivs=forces.tau_derivs, r=r, cache=cache_fd)
            row = [f"{t:.10g}"]
            row += [repr(float(v)) for v in out.V1_next_derivs.ravel()]
            row += [repr(float(v)) for v in out.qdd_derivs.ravel()]
            writer.writerow(row)
            ts.append(t)
            v_rows.append(out.V1_next_derivs.copy())
            q_rows.append(out.qdd_derivs.copy())
    except ModelError as exc:
        _fail(2, str(exc))
    finally:
        if close:
            fh.close()
    if plot and out_path:
        from .plotting import plot_order_stacks
        base = out_path.rsplit(".", 1)[0]
        plot_order_stacks(ts, np.stack(v_rows), "base twist derivatives",
                          base + "_twist.png", TWIST_COMPS)
        plot_order_stacks(ts, np.stack(q_rows).transpose(0, 2, 1),
                          "joint acceleration derivatives",
                          base + "_accel.png",
                          [f"q{j + 2}" for j in range(model.njoints)])


@main.command("hybrid")
@_model_opt
@_traj_opt
@_order_opt
@click.option("--jq", "jq_arg", default="", show_default=True,
              help="comma-separated body ids with prescribed motion "
                   "(the rest get prescribed torques)")
@click.option("--base-mode", type=click.Choice(["wrench", "twist"]),
              default="wrench", show_default=True)
@_out_opt
@_dt_opt
@_steps_opt
def cmd_hybrid(model_path, traj, order, jq_arg, base_mode, out_path, dt,
               steps):
    """Hybrid dynamics along a trajectory: prescribed-motion joints take the
    trajectory stacks, the rest take the inverse-dynamics torques; solved
    quantities should reproduce the trajectory."""
    model = _load_model(model_path)
    source = _resolve_traj(traj, model, dt, steps)
    r = order
    try:
        jq = tuple(int(s) for s in jq_arg.split(",") if s.strip())
    except ValueError:
        _fail(2, f"cannot parse --jq {jq_arg!r}")
    jtau = tuple(sorted(set(range(2, model.nbodies + 1)) - set(jq)))
    cache_id = KinematicsCache(model, capacity=r + 1)
    cache_hy = KinematicsCache(model, capacity=r)
    fh, close = _open_out(out_path)
    try:
        writer = csv.writer(fh)
        hdr = ["t"]
        for k in range(1, r + 2):
            hdr += [f"V1_{k}_{c}" for c in TWIST_COMPS]
        for j in jtau:
            hdr += [f"q{j}_{k}" for k in range(2, r + 3)]
        for j in jq:
            hdr += [f"tau{j}_{k}" for k in range(r + 1)]
        if base_mode == "twist":
            for k in range(r + 1):
                hdr += [f"W1_{k}_{c}" for c in WRENCH_COMPS]
        writer.writerow(hdr)
        for t, mi in source.samples(r + 1):
            forward_kinematics(model, mi, r + 1, cache=cache_id)
            forces = hgrne(model, cache_id, r=r)
            spec = HybridSpec(
                jq=jq, jtau=jtau,
                base_mode="wrench_given" if base_mode == "wrench"
                else "twist_given",
                q_presc_derivs=np.stack(
                    [mi.q_derivs[j - 2, 2:r + 3] for j in jq])
                if jq else None,
                tau_presc_derivs=np.stack(
                    [forces.tau_derivs[j - 2] for j in jtau])
                if jtau else None,
                base_wrench_derivs=forces.Q1_derivs,
                base_twist_derivs=mi.V1_derivs[1:r + 2])
            out = hghyb(model, mi.C0_1, mi.V1_derivs[0], mi.q_derivs[:, 0],
                        mi.q_derivs[:, 1], spec, r=r, cache=cache_hy)
            row = [f"{t:.10g}"]
            row += [repr(float(v)) for v in out.V1_next_derivs.ravel()]
            for j in jtau:
                row += [repr(float(v)) for v in out.qdd_derivs[j - 2]]
            row += [repr(float(v)) for v in out.tau_jq_derivs.ravel()]
            if base_mode == "twist":
                row += [repr(float(v)) for v in out.base_wrench_derivs.ravel()]
            writer.writerow(row)
    except ModelError as exc:
        _fail(2, str(exc))
    finally:
        if close:
            fh.close()


@main.command("roundtrip")
@_model_opt
@_traj_opt
@click.option("--order", "-r", default=5, show_default=True)
@_dt_opt
@_steps_opt
@click.option("--id-csv", "id_csv", default=None,
              help="reuse inverse-dynamics outputs from this CSV instead of "
                   "recomputing them")
@click.option("--tol", default=1e-6, show_default=True)
def cmd_roundtrip(model_path, traj, order, dt, steps, id_csv, tol):
    """Inverse then forward dynamics along the trajectory; PASS when every
    order's recovery error stays within tolerance."""
    model = _load_model(model_path)
    if not traj.startswith("builtin:"):
        _fail(2, "roundtrip needs the builtin trajectory "
                 "(analytic reference derivatives)")
    _resolve_traj(traj, model, dt, steps)
    r = order
    id_stacks = None
    if id_csv is not None:
        id_stacks = _read_id_csv(id_csv, model.njoints, r, steps)
    result = run_roundtrip(model, ReferenceTrajectory(), r, dt=dt,
                           nsteps=steps, id_stacks=id_stacks)
    for k in range(r + 1):
        click.echo(f"order {k}: max rel err qdd {result.err_qdd[k]:.3e}, "
                   f"base twist {result.err_v1[k]:.3e}")
    click.echo(f"elapsed {result.elapsed_s:.2f} s for {steps} steps")
    if result.passed(tol):
        click.echo(f"PASS (max err {result.max_err:.3e} <= {tol:g})")
    else:
        click.echo(f"FAIL at order {result.worst_order()} "
                   f"(max err {result.max_err:.3e} > {tol:g})")
        sys.exit(1)


def _read_id_csv(path, njoints, r, steps):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        _fail(2, f"cannot read {path}: {exc}")
    if len(rows) < steps:
        _fail(2, f"{path}: has {len(rows)} rows, need {steps}")
    stacks = []
    try:
        for row in rows[:steps]:
            q1 = np.array([[float(row[f"Q1_{k}_{c}"]) for c in WRENCH_COMPS]
                           for k in range(r + 1)])
            tau = np.array([[float(row[f"tau{j + 2}_{k}"])
                             for k in range(r + 1)]
                            for j in range(njoints)])
            stacks.append((q1, tau))
    except (KeyError, ValueError) as exc:
        _fail(2, f"{path}: {exc}")
    return stacks


@main.command("bench")
@click.option("--algo", type=click.Choice(["id", "fd", "both"]),
              default="both", show_default=True)
@click.option("--sweep", type=click.Choice(["over_N", "over_r", "both"]),
              default="both", show_default=True)
@click.option("--reps", default=1000, show_default=True)
@click.option("--warmup", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--nbod", default="1,2,4,8,20,40,99", show_default=True,
              help="bodies per branch for the over_N sweep")
@click.option("--orders", default="0,1,2,3,4,5", show_default=True,
              help="derivative orders for the over_N sweep")
@click.option("--orders-r", default="0,1,2,3,4,5,6,7,8", show_default=True,
              help="derivative orders for the over_r sweep (N = 101)")
@_out_opt
@_plot_opt
def cmd_bench(algo, sweep, reps, warmup, seed, nbod, orders, orders_r,
              out_path, plot):
    """Timing sweeps over tree size and derivative order; CSV rows
    (algo, sweep, N, r, reps, mean_s, std_s)."""
    algos = ["id", "fd"] if algo == "both" else [algo]
    sweeps = ["over_N", "over_r"] if sweep == "both" else [sweep]
    n_bod = tuple(int(s) for s in nbod.split(","))
    orders_n = tuple(int(s) for s in orders.split(","))
    orders_rr = tuple(int(s) for s in orders_r.split(","))
    rows = []
    for a in algos:
        for s in sweeps:
            cfg = BenchConfig(
                algo=a, sweep=s, n_bod=n_bod,
                orders=orders_n if s == "over_N" else orders_rr,
                reps=reps, warmup=warmup, seed=seed)
            rows.extend(run_bench(cfg))
    fh, close = _open_out(out_path)
    try:
        fh.write(f"# seed={seed} reps={reps} warmup={warmup}\n")
        fh.write("# inputs: uniform [-1,1] per component, fixed per sweep\n")
        writer = csv.writer(fh)
        writer.writerow(["algo", "sweep", "N", "r", "reps", "mean_s",
                         "std_s"])
        for row in rows:
            writer.writerow([row.algo, row.sweep, row.N, row.r, row.reps,
                             repr(float(row.mean_s)), repr(float(row.std_s))])
    finally:
        if close:
            fh.close()
    if plot and out_path:
        from .plotting import plot_bench_rows
        plot_bench_rows(rows, out_path.rsplit(".", 1)[0] + ".png")


@main.command("fdcheck")
@_model_opt
@click.option("--order", "-r", default=5, show_default=True)
@click.option("--step", default=1e-3, show_default=True,
              help="stencil step [s]")
@click.option("--threshold", default=1e-4, show_default=True)
@click.option("--at", "t0", default=None, type=float,
              help="trajectory time at the stencil center")
def cmd_fdcheck(model_path, order, step, threshold, t0):
    """Audit every exported derivative stack against a sixth-order central
    finite-difference stencil along the builtin trajectory."""
    model = _load_model(model_path)
    if model.nbodies != 7:
        _fail(2, "fdcheck runs on the 7-body example model")
    try:
        report = run_fdcheck(model, ReferenceTrajectory(), order, step=step,
                             t0=t0)
    except ValueError as exc:
        _fail(2, str(exc))
    worst_name, worst = None, -1.0
    for name, err in sorted(report.items()):
        click.echo(f"{name:10s} worst rel err {err:.3e}")
        if err > worst:
            worst_name, worst = name, err
    if worst > threshold:
        click.echo(f"FAIL: {worst_name} exceeds {threshold:g} "
                   f"({worst:.3e})")
        sys.exit(1)
    click.echo(f"PASS (worst {worst:.3e} <= {threshold:g}, step {step:g})")


# ---------------------------------------------------------------------------
# RK4 integration helper (energy sanity test)
# ---------------------------------------------------------------------------

def rk4_simulate(model, C0_1, V1, q, qdot, dt: float, steps: int,
                 wprop=None, tau=None):
    """Thin RK4 wrapper around order-0 forward dynamics.

    Integrates (C, V_1, q, qdot) with the base pose evolving by
    Cdot = [V_1] C; the rotation block is re-orthonormalized each step.
    Returns the list of states (Pose, V1, q, qdot) including the initial
    one.  Constant inputs only; meant for short sanity runs, not as a
    simulator.
    """
    wprop = np.zeros((1, 6)) if wprop is None else np.asarray(
        wprop, dtype=float).reshape(1, 6)
    tau = np.zeros((model.njoints, 1)) if tau is None else np.asarray(
        tau, dtype=float).reshape(model.njoints, 1)
    cache = KinematicsCache(model, capacity=0)

    def deriv(cmat, v1, qv, qd):
        out = hgabi(model, Pose.from_matrix(cmat), v1, qv, qd,
                    Wprop_derivs=wprop, tau_derivs=tau, r=0, cache=cache)
        vhat = np.zeros((4, 4))
        vhat[:3, :3] = hat(v1[:3])
        vhat[:3, 3] = v1[3:]
        return vhat @ cmat, out.V1_next_derivs[0], qd, out.qdd_derivs[:, 0]

    state = (np.asarray(C0_1.matrix() if isinstance(C0_1, Pose) else C0_1,
                        dtype=float),
             np.asarray(V1, dtype=float).copy(),
             np.asarray(q, dtype=float).copy(),
             np.asarray(qdot, dtype=float).copy())
    out_states = [state]
    for _ in range(steps):
        c, v, qv, qd = state
        k1 = deriv(c, v, qv, qd)
        k2 = deriv(c + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1],
                   qv + 0.5 * dt * k1[2], qd + 0.5 * dt * k1[3])
        k3 = deriv(c + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1],
                   qv + 0.5 * dt * k2[2], qd + 0.5 * dt * k2[3])
        k4 = deriv(c + dt * k3[0], v + dt * k3[1],
                   qv + dt * k3[2], qd + dt * k3[3])
        new = []
        for i in range(4):
            new.append(state[i] + dt / 6.0
                       * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        u, _, vt = np.linalg.svd(new[0][:3, :3])
        new[0][:3, :3] = u @ vt
        new[0][3] = (0.0, 0.0, 0.0, 1.0)
        state = tuple(new)
        out_states.append(state)
    return out_states


if __name__ == "__main__":
    main()
