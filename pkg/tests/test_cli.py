import csv

import numpy as np
import pytest
from click.testing import CliRunner

from fbdyn.cli import main, rk4_simulate, write_traj_csv
from fbdyn.kinematics import MotionInput, forward_kinematics
from fbdyn.liegroup import Pose
from fbdyn.tilthex import ReferenceTrajectory, tilthex_model_path


@pytest.fixture()
def runner():
    return CliRunner()


MODEL = tilthex_model_path()


def test_validate_ok(runner):
    res = runner.invoke(main, ["validate", "--model", MODEL])
    assert res.exit_code == 0
    assert "OK: 7 bodies" in res.output


def test_missing_model_exits_2(runner):
    res = runner.invoke(main, ["validate", "--model", "/no/such/file.model"])
    assert res.exit_code == 2
    assert "/no/such/file.model" in res.output


def test_invalid_model_exits_2(runner, tmp_path):
    bad = tmp_path / "bad.model"
    bad.write_text("{broken json")
    res = runner.invoke(main, ["id", "--model", str(bad), "--order", "0"])
    assert res.exit_code == 2


def test_validate_flags_violations(runner, tmp_path):
    text = open(MODEL).read().replace('"mass": 0.25', '"mass": -0.25', 1)
    bad = tmp_path / "neg.model"
    bad.write_text(text)
    res = runner.invoke(main, ["validate", "--model", str(bad)])
    assert res.exit_code == 2  # negative mass already fails the build


def test_id_csv_output(runner, tmp_path):
    out = tmp_path / "id.csv"
    res = runner.invoke(main, ["id", "--model", MODEL, "--order", "2",
                               "--steps", "5", "--out", str(out)])
    assert res.exit_code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5
    assert "Q1_2_fz" in rows[0]
    assert "tau7_2" in rows[0]
    # deterministic rerun
    out2 = tmp_path / "id2.csv"
    runner.invoke(main, ["id", "--model", MODEL, "--order", "2",
                         "--steps", "5", "--out", str(out2)])
    assert open(out).read() == open(out2).read()


def test_id_rest_trajectory_constant_hover(runner, tmp_path):
    # hand-written rest trajectory file: all stacks zero, three timesteps
    traj = tmp_path / "rest.csv"
    hdr = ["t"]
    for k in range(2):
        hdr += [f"V1_{k}_{c}" for c in ("wx", "wy", "wz", "vx", "vy", "vz")]
    for j in range(2, 8):
        hdr += [f"q{j}_{k}" for k in range(3)]
    with open(traj, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(hdr)
        for i in range(3):
            w.writerow([0.1 * i] + [0.0] * (len(hdr) - 1))
    out = tmp_path / "rest_id.csv"
    res = runner.invoke(main, ["id", "--model", MODEL, "--order", "0",
                               "--traj", str(traj), "--out", str(out)])
    assert res.exit_code == 0, res.output
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    for row in rows:
        assert float(row["Q1_0_fz"]) == pytest.approx(39.24, abs=1e-12)
        assert float(row["Q1_0_fx"]) == 0.0
    assert rows[0]["tau2_0"] == rows[2]["tau2_0"]


def test_traj_file_insufficient_order(runner, tmp_path):
    traj = tmp_path / "short.csv"
    write_traj_csv(traj, ReferenceTrajectory(), motion_order=1, dt=0.01,
                   steps=3)
    res = runner.invoke(main, ["id", "--model", MODEL, "--order", "3",
                               "--traj", str(traj)])
    assert res.exit_code == 2
    assert "motion order" in res.output


def test_fd_csv_output(runner, tmp_path):
    out = tmp_path / "fd.csv"
    res = runner.invoke(main, ["fd", "--model", MODEL, "--order", "1",
                               "--steps", "4", "--out", str(out)])
    assert res.exit_code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    # FD reproduces the trajectory acceleration stacks
    traj = ReferenceTrajectory()
    mi = traj.motion_input(0.0, 2)
    assert float(rows[0]["q2_2"]) == pytest.approx(mi.q_derivs[0, 2],
                                                   abs=1e-9)
    assert float(rows[0]["V1_1_vz"]) == pytest.approx(mi.V1_derivs[1, 5],
                                                      abs=1e-9)


def test_hybrid_csv_output(runner, tmp_path):
    out = tmp_path / "hy.csv"
    res = runner.invoke(main, ["hybrid", "--model", MODEL, "--order", "1",
                               "--steps", "3", "--jq", "2,3,4",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert "tau2_0" in rows[0] and "q5_2" in rows[0]
    traj = ReferenceTrajectory()
    mi = traj.motion_input(0.0, 2)
    assert float(rows[0]["q5_2"]) == pytest.approx(mi.q_derivs[3, 2],
                                                   abs=1e-8)


def test_roundtrip_pass(runner):
    res = runner.invoke(main, ["roundtrip", "--model", MODEL, "--order",
                               "2", "--steps", "50"])
    assert res.exit_code == 0
    assert "PASS" in res.output


def test_roundtrip_corrupted_torque_column_fails(runner, tmp_path):
    steps = 20
    idcsv = tmp_path / "id.csv"
    res = runner.invoke(main, ["id", "--model", MODEL, "--order", "1",
                               "--steps", str(steps), "--out", str(idcsv)])
    assert res.exit_code == 0
    good = runner.invoke(main, ["roundtrip", "--model", MODEL, "--order",
                                "1", "--steps", str(steps), "--id-csv",
                                str(idcsv)])
    assert good.exit_code == 0, good.output
    # corrupt the order-1 torque column of joint 3
    with open(idcsv) as fh:
        rows = list(csv.reader(fh))
    col = rows[0].index("tau3_1")
    for row in rows[1:]:
        row[col] = repr(float(row[col]) + 50.0)
    with open(idcsv, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    bad = runner.invoke(main, ["roundtrip", "--model", MODEL, "--order",
                               "1", "--steps", str(steps), "--id-csv",
                               str(idcsv)])
    assert bad.exit_code == 1
    assert "FAIL at order 1" in bad.output


def test_fdcheck_pass_and_large_step_growth(runner):
    res = runner.invoke(main, ["fdcheck", "--model", MODEL, "--order", "2"])
    assert res.exit_code == 0
    assert "PASS" in res.output

    def worst(output):
        return max(float(line.rsplit(" ", 1)[-1])
                   for line in output.splitlines()
                   if "worst rel err" in line)

    # truncation error grows steeply with the step (reference rates are
    # slow, so breaking the 1e-4 threshold takes a step of seconds)
    res_big = runner.invoke(main, ["fdcheck", "--model", MODEL, "--order",
                                   "2", "--step", "2.0"])
    assert res_big.exit_code == 1
    assert "FAIL" in res_big.output
    assert worst(res_big.output) > 100.0 * worst(res.output)


def test_bench_smoke(runner, tmp_path):
    out = tmp_path / "bench.csv"
    res = runner.invoke(main, ["bench", "--algo", "id", "--sweep", "over_N",
                               "--reps", "1", "--nbod", "1,2", "--orders",
                               "0", "--seed", "7", "--out", str(out)])
    assert res.exit_code == 0
    lines = open(out).read().splitlines()
    assert lines[0].startswith("# seed=7")
    rows = list(csv.DictReader(line for line in lines
                               if not line.startswith("#")))
    assert [int(r["N"]) for r in rows] == [6, 11]
    assert all(float(r["mean_s"]) > 0 for r in rows)


def test_plot_files_rendered(runner, tmp_path):
    out = tmp_path / "id.csv"
    res = runner.invoke(main, ["id", "--model", MODEL, "--order", "1",
                               "--steps", "4", "--out", str(out), "--plot"])
    assert res.exit_code == 0
    assert (tmp_path / "id_wrench.png").exists()
    assert (tmp_path / "id_torques.png").exists()

    bout = tmp_path / "bench.csv"
    res = runner.invoke(main, ["bench", "--algo", "id", "--sweep", "over_N",
                               "--reps", "1", "--nbod", "1,2", "--orders",
                               "0", "--out", str(bout), "--plot"])
    assert res.exit_code == 0
    assert (tmp_path / "bench.png").exists()


def test_rk4_energy_conservation(tilthex_model):
    # zero gravity, no inputs: kinetic energy is conserved
    import fbdyn.tilthex as th
    model = th.build_tilthex(th.TiltHexParams(gravity=0.0))
    rng = np.random.default_rng(3)
    v1 = 0.3 * rng.standard_normal(6)
    q = 0.2 * rng.standard_normal(6)
    qd = 0.4 * rng.standard_normal(6)

    def energy(cmat, v1, q, qd):
        mi = MotionInput(Pose.from_matrix(cmat),
                         np.vstack([v1, np.zeros(6)]),
                         np.column_stack([q, qd, np.zeros(6)]))
        cache = forward_kinematics(model, mi, 1)
        return 0.5 * sum(cache.V[j, 0] @ cache.M[j, 0] @ cache.V[j, 0]
                         for j in range(model.nbodies))

    states = rk4_simulate(model, Pose.identity(), v1, q, qd, dt=1e-3,
                          steps=300)
    e0 = energy(*states[0])
    e1 = energy(*states[-1])
    assert abs(e1 - e0) <= 1e-7 * max(e0, 1.0)
