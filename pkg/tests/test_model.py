import numpy as np
import pytest

from fbdyn.liegroup import Pose
from fbdyn.model import (BodySpec, JointSpec, ModelError, build_model,
                         dumps_model, inertia_matrix, load_model,
                         loads_model, save_model, validate)
from fbdyn.tilthex import build_tilthex, tilthex_model_path


def _base(mass=2.0, pose=None):
    return BodySpec(id=1, parent=0,
                    A_parent_child=pose or Pose.identity(),
                    inertia_body=inertia_matrix(mass, 0.01 * np.eye(3)))


def _link(bid, parent, xyz, joint, mass=0.5):
    return BodySpec(id=bid, parent=parent,
                    A_parent_child=Pose(np.eye(3), np.asarray(xyz, float)),
                    inertia_body=inertia_matrix(mass, 0.001 * np.eye(3)),
                    joint=joint)


def test_single_floating_body():
    m = build_model([_base()])
    assert m.nbodies == 1
    assert m.njoints == 0
    assert np.array_equal(m.A0[0], np.eye(4))
    assert m.children[0] == ()


def test_revolute_home_screw_translated_frame():
    # child frame aligned with inertial, offset (x0, y0, z0); joint axis y,
    # point (0, 0, d) in the child frame -> p = (x0, y0, z0 + d)
    x0, y0, z0, d = 0.3, -0.2, 0.5, 0.06
    joint = JointSpec(kind="revolute", axis=[0.0, 1.0, 0.0],
                      point=[0.0, 0.0, d])
    m = build_model([_base(), _link(2, 1, [x0, y0, z0], joint)])
    p = np.array([x0, y0, z0 + d])
    e = np.array([0.0, 1.0, 0.0])
    assert np.allclose(m.Y[1, :3], e, atol=0.0)
    assert np.allclose(m.Y[1, 3:], np.cross(p, e), atol=1e-15)


def test_prismatic_home_screw():
    joint = JointSpec(kind="prismatic", axis=[1.0, 0.0, 0.0])
    m = build_model([_base(), _link(2, 1, [0.0, 0.0, 0.0], joint)])
    assert np.allclose(m.Y[1], [0, 0, 0, 1, 0, 0], atol=0.0)


def test_rotated_child_frame_maps_axis():
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    spec = BodySpec(id=2, parent=1, A_parent_child=Pose(rot, np.zeros(3)),
                    inertia_body=inertia_matrix(0.5, 0.001 * np.eye(3)),
                    joint=JointSpec(kind="revolute", axis=[1.0, 0.0, 0.0]))
    m = build_model([_base(), spec])
    # axis x in the child frame becomes y in the inertial frame
    assert np.allclose(m.Y[1, :3], [0.0, 1.0, 0.0], atol=1e-15)


def test_shipped_tilthex_file():
    m = load_model(tilthex_model_path())
    assert m.nbodies == 7
    assert all(k == "revolute" for k in m.joint_kind[1:])
    assert m.children[0] == (1, 4)   # bodies 2 and 5, 0-based
    assert m.children[1] == (2,)
    # file content is the canonical dump of the built example
    assert dumps_model(m) == dumps_model(build_tilthex())


def test_duplicate_id_parse_error(tmp_path):
    text = dumps_model(build_tilthex())
    broken = text.replace('"id": 3', '"id": 2', 1)
    with pytest.raises(ModelError, match="duplicated body id"):
        loads_model(broken)


def test_parse_error_reports_location():
    with pytest.raises(ModelError, match="line"):
        loads_model("{not json")


def test_com_offset_must_be_zero():
    text = dumps_model(build_tilthex()).replace(
        '"com_offset": [\n          0.0,\n          0.0,\n          0.0\n'
        '        ]',
        '"com_offset": [\n          0.1,\n          0.0,\n          0.0\n'
        '        ]', 1)
    with pytest.raises(ModelError, match="com_offset"):
        loads_model(text)


def test_roundtrip_canonical_serialization(tmp_path):
    path = tmp_path / "m.model"
    save_model(build_tilthex(), path)
    canon = dumps_model(load_model(path))
    assert canon == dumps_model(load_model(path))
    path2 = tmp_path / "m2.model"
    with open(path2, "w") as fh:
        fh.write(canon)
    assert dumps_model(load_model(path2)) == canon


def test_rpy_pose_parsing():
    m = loads_model("""
    {"gravity": 9.81, "bodies": [
      {"id": 1, "parent": 0, "A": {"xyz": [0,0,0]},
       "inertia": {"mass": 1.0, "J": [[0.1,0,0],[0,0.1,0],[0,0,0.1]]}},
      {"id": 2, "parent": 1,
       "joint": {"kind": "revolute", "axis": [0,0,1]},
       "A": {"rpy": [0, 0, 1.5707963267948966], "xyz": [1, 0, 0]},
       "inertia": {"mass": 0.5, "J": [[0.01,0,0],[0,0.01,0],[0,0,0.01]]}}
    ]}""")
    assert np.allclose(m.A_parent_child[1, :3, :3],
                       [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-12)


def test_traversal_invariants(tilthex_model):
    m = tilthex_model
    n = m.nbodies
    assert len(m.preorder) == len(m.postorder) == n
    assert m.preorder[0] == 0
    pos_pre = np.argsort(m.preorder)
    pos_post = np.argsort(m.postorder)
    for j in range(1, n):
        assert pos_pre[j] > pos_pre[m.parent[j]]
        assert pos_post[j] < pos_post[m.parent[j]]


def test_home_screw_axis_normalized(tilthex_model):
    for j in range(1, tilthex_model.nbodies):
        blk = tilthex_model.Y[j, :3]
        assert abs(np.linalg.norm(blk) - 1.0) <= 1e-9


def test_build_deterministic():
    a, b = build_tilthex(), build_tilthex()
    for name in ("A0", "Y", "M_body", "preorder", "postorder", "parent"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_validate_clean_and_flags_mutation(tilthex_model):
    assert validate(tilthex_model) == []
    m = build_tilthex()
    m.Y[1, :3] *= 2.0
    assert any("not unit length" in msg for msg in validate(m))


def test_bad_inputs_rejected():
    with pytest.raises(ModelError, match="unit length"):
        JointSpec(kind="revolute", axis=[0.0, 2.0, 0.0])
    with pytest.raises(ModelError, match="kind"):
        JointSpec(kind="helical", axis=[0.0, 1.0, 0.0])
    joint = JointSpec(kind="revolute", axis=[0.0, 1.0, 0.0])
    with pytest.raises(ModelError, match="dangling parent"):
        build_model([_base(), _link(2, 5, [0, 0, 0], joint)])
    with pytest.raises(ModelError, match="missing joint"):
        build_model([_base(),
                     BodySpec(id=2, parent=1, A_parent_child=Pose.identity(),
                              inertia_body=inertia_matrix(1, np.eye(3)))])
    with pytest.raises(ModelError, match="ids must be"):
        build_model([_base(), _link(3, 1, [0, 0, 0], joint)])
    bad_inertia = inertia_matrix(1.0, -np.eye(3))
    with pytest.raises(ModelError, match="positive-definite"):
        build_model([_base(),
                     BodySpec(id=2, parent=1,
                              A_parent_child=Pose.identity(),
                              inertia_body=bad_inertia, joint=joint)])


def test_zero_inertia_body_needs_single_child():
    joint = JointSpec(kind="revolute", axis=[0.0, 1.0, 0.0])
    zero = BodySpec(id=2, parent=1, A_parent_child=Pose.identity(),
                    inertia_body=np.zeros((6, 6)), joint=joint)
    with pytest.raises(ModelError, match="exactly one child"):
        build_model([_base(), zero])
    jx = JointSpec(kind="revolute", axis=[1.0, 0.0, 0.0])
    m = build_model([_base(), zero, _link(3, 2, [0, 0, -0.1], jx)])
    assert m.nbodies == 3


def test_subtree_listing(tilthex_model):
    sub = sorted(tilthex_model.subtree(1))
    assert sub == [1, 2, 3]   # body 2's arm: bodies 2, 3, 4 (0-based 1,2,3)
