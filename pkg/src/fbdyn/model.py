"""Immutable robot description and the model file format.

A model is a kinematic tree rooted at body 1 (the floating base).  Bodies
carry 1-based ids in the file format and the public API; internally all
arrays are 0-based with row j describing body id j+1.  Every joint is a
1-DoF revolute or prismatic whose axis/point are given in the child body
frame at the home configuration; multi-DoF joints must be decomposed by the
user into chained 1-DoF joints with zero-inertia intermediate bodies (such
bodies must have exactly one child so the articulated solve stays regular).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .liegroup import Pose, hat

REVOLUTE = "revolute"
PRISMATIC = "prismatic"

_AXIS_TOL = 1e-9
_SYM_TOL = 1e-12


class ModelError(ValueError):
    """Malformed model description (parse error or invariant violation)."""


@dataclass(frozen=True)
class JointSpec:
    """1-DoF joint, axis/point expressed in the child body frame at home."""

    kind: str
    axis: np.ndarray
    point: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise ModelError(f"unknown joint kind {self.kind!r}")
        if abs(np.linalg.norm(self.axis) - 1.0) > _AXIS_TOL:
            raise ModelError(
                f"joint axis must be unit length, got |axis| = "
                f"{np.linalg.norm(self.axis):.12g}")


@dataclass(frozen=True)
class BodySpec:
    """One body: id, parent id (0 = world for the base), home transform
    A^{parent}_{body}, body-fixed inertia at the CoM, and the joint leading
    to it (absent for the base)."""

    id: int
    parent: int
    A_parent_child: Pose
    inertia_body: np.ndarray
    joint: JointSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "inertia_body",
                           np.asarray(self.inertia_body, dtype=float))
        if self.inertia_body.shape != (6, 6):
            raise ModelError(f"body {self.id}: inertia must be 6x6")


def inertia_matrix(mass: float, J) -> np.ndarray:
    """Body-fixed spatial inertia blockdiag(J, m I) for a CoM frame."""
    m = np.zeros((6, 6))
    m[:3, :3] = np.asarray(J, dtype=float)
    m[3:, 3:] = mass * np.eye(3)
    return m


@dataclass(frozen=True)
class RobotModel:
    """Preprocessed tree: traversal orders, accumulated home poses and the
    constant spatial home screws, ready for the recursions.

    Arrays are 0-based over bodies (row j <-> body id j+1); ``Y[0]`` is
    unused since the base has no joint.
    """

    nbodies: int
    parent: np.ndarray            # (N,) int64, parent[0] == -1
    children: tuple               # tuple of tuples, 0-based, sorted
    preorder: np.ndarray          # (N,) int64
    postorder: np.ndarray         # (N,) int64
    A_parent_child: np.ndarray    # (N, 4, 4)
    A0: np.ndarray                # (N, 4, 4) accumulated home poses
    Y: np.ndarray                 # (N, 6) spatial home screws
    joint_kind: tuple             # per body: None | 'revolute' | 'prismatic'
    M_body: np.ndarray            # (N, 6, 6) body-fixed inertias
    gravity: float
    specs: tuple                  # original BodySpec tuple, sorted by id

    @property
    def njoints(self) -> int:
        return self.nbodies - 1

    def joint_body_ids(self):
        """1-based body ids of the jointed bodies, i.e. 2..N."""
        return range(2, self.nbodies + 1)

    def subtree(self, body0: int):
        """0-based indices of the subtree rooted at 0-based index body0."""
        out = [body0]
        stack = [body0]
        while stack:
            j = stack.pop()
            for c in self.children[j]:
                out.append(c)
                stack.append(c)
        return out


def _rpy_matrix(rpy) -> np.ndarray:
    """Fixed-axis roll-pitch-yaw: R = Rz(yaw) Ry(pitch) Rx(roll)."""
    r, p, y = (float(v) for v in rpy)
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


def _check_inertia(spec: BodySpec, nchildren: int, errors: list):
    m = spec.inertia_body
    scale = float(np.abs(m).max())
    if scale == 0.0:
        if spec.parent == 0:
            errors.append(f"body {spec.id}: base inertia must be nonzero")
        elif nchildren != 1:
            errors.append(
                f"body {spec.id}: zero-inertia body must have exactly one "
                f"child (has {nchildren})")
        return
    if np.abs(m - m.T).max() > _SYM_TOL * max(1.0, scale):
        errors.append(f"body {spec.id}: inertia not symmetric")
        return
    mass_block = m[3:, 3:]
    mass = mass_block[0, 0]
    if mass <= 0.0 or np.abs(mass_block - mass * np.eye(3)).max() \
            > _SYM_TOL * max(1.0, scale):
        errors.append(f"body {spec.id}: mass block must be m*I with m > 0")
        return
    try:
        np.linalg.cholesky(m + 0.0)
    except np.linalg.LinAlgError:
        errors.append(f"body {spec.id}: inertia not positive-definite")


def build_model(specs, gravity: float = 9.81) -> RobotModel:
    """Assemble the runtime model from body specs.

    Accumulates home poses A0_j = A0_{p(j)} A^{p(j)}_j, maps each joint's
    axis/point to the inertial frame at home and forms the constant spatial
    screw Y (revolute: (e, [p]e); prismatic: (0, e)).  Traversals are
    depth-first with children ordered by body id, which fixes the
    floating-point summation order and makes the build deterministic.
    """
    specs = tuple(sorted(specs, key=lambda s: s.id))
    n = len(specs)
    errors: list[str] = []
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ModelError(f"duplicated body id(s): {dup}")
    if ids != list(range(1, n + 1)):
        raise ModelError(f"body ids must be 1..{n}, got {ids}")
    if specs[0].parent != 0:
        raise ModelError("body 1 must be the base (parent 0)")
    if specs[0].joint is not None:
        raise ModelError("the base has no joint")
    children: list[list[int]] = [[] for _ in range(n)]
    for s in specs[1:]:
        if s.joint is None:
            raise ModelError(f"body {s.id}: missing joint")
        if not (1 <= s.parent <= n):
            raise ModelError(f"body {s.id}: dangling parent {s.parent}")
        if s.parent >= s.id:
            # ids are topologically sorted by construction of the format;
            # a parent with a higher id would allow cycles.
            raise ModelError(
                f"body {s.id}: parent id {s.parent} must be smaller "
                f"(bodies are numbered root-first)")
        children[s.parent - 1].append(s.id - 1)

    for s in specs:
        _check_inertia(s, len(children[s.id - 1]), errors)
    base_a0 = specs[0].A_parent_child.matrix()
    if np.abs(base_a0 - np.eye(4)).max() > 1e-12:
        errors.append("body 1: base home transform must be the identity")
    if errors:
        raise ModelError("; ".join(errors))

    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    for s in specs[1:]:
        parent[s.id - 1] = s.parent - 1
    A_pc = np.stack([s.A_parent_child.matrix() for s in specs])
    A0 = np.empty_like(A_pc)
    A0[0] = A_pc[0]
    preorder = np.empty(n, dtype=np.int64)
    stack = [0]
    k = 0
    seen = 0
    while stack:
        j = stack.pop()
        preorder[k] = j
        k += 1
        seen += 1
        for c in reversed(children[j]):
            stack.append(c)
    if seen != n:
        raise ModelError("disconnected tree")
    for j in preorder[1:]:
        A0[j] = A0[parent[j]] @ A_pc[j]

    # postorder = reversed DFS sequence with children pushed in ascending
    # order (iterative, so chains of hundreds of bodies do not recurse)
    postorder = np.empty(n, dtype=np.int64)
    stack = [0]
    k = n
    while stack:
        j = stack.pop()
        k -= 1
        postorder[k] = j
        for c in children[j]:
            stack.append(c)

    Y = np.zeros((n, 6))
    kinds: list[str | None] = [None] * n
    for s in specs[1:]:
        j = s.id - 1
        kinds[j] = s.joint.kind
        rot = A0[j, :3, :3]
        e = rot @ s.joint.axis
        if s.joint.kind == REVOLUTE:
            p = A0[j, :3, :3] @ s.joint.point + A0[j, :3, 3]
            Y[j, :3] = e
            Y[j, 3:] = hat(p) @ e
        else:
            Y[j, 3:] = e
    M_body = np.stack([s.inertia_body for s in specs])

    return RobotModel(
        nbodies=n,
        parent=parent,
        children=tuple(tuple(c) for c in children),
        preorder=preorder,
        postorder=postorder,
        A_parent_child=np.ascontiguousarray(A_pc),
        A0=np.ascontiguousarray(A0),
        Y=Y,
        joint_kind=tuple(kinds),
        M_body=np.ascontiguousarray(M_body),
        gravity=float(gravity),
        specs=specs,
    )


def validate(model: RobotModel) -> list[str]:
    """Re-check every model invariant; returns all violations found."""
    issues: list[str] = []
    n = model.nbodies
    if model.preorder.shape[0] != n or model.postorder.shape[0] != n:
        issues.append("traversal length mismatch")
    if model.preorder[0] != 0:
        issues.append("preorder must start at the base")
    pos_pre = np.argsort(model.preorder)
    pos_post = np.argsort(model.postorder)
    for j in range(1, n):
        p = model.parent[j]
        if pos_pre[j] < pos_pre[p]:
            issues.append(f"body {j + 1} precedes its parent in preorder")
        if pos_post[j] > pos_post[p]:
            issues.append(f"body {j + 1} follows its parent in postorder")
    for j in range(1, n):
        kind = model.joint_kind[j]
        blk = model.Y[j, :3] if kind == REVOLUTE else model.Y[j, 3:]
        if abs(np.linalg.norm(blk) - 1.0) > _AXIS_TOL:
            issues.append(f"body {j + 1}: home screw axis not unit length")
    if np.abs(model.A0[0] - np.eye(4)).max() > 1e-12:
        issues.append("base home pose must be the identity")
    errors: list[str] = []
    for s in model.specs:
        _check_inertia(s, len(model.children[s.id - 1]), errors)
    issues.extend(errors)
    return issues


# ---------------------------------------------------------------------------
# model file format (UTF-8 JSON)
# ---------------------------------------------------------------------------

def _parse_pose(obj, where: str) -> Pose:
    if "rotmat" in obj:
        rot = np.asarray(obj["rotmat"], dtype=float)
        if rot.shape != (3, 3):
            raise ModelError(f"{where}: rotmat must be 3x3")
    elif "rpy" in obj:
        rot = _rpy_matrix(obj["rpy"])
    else:
        rot = np.eye(3)
    xyz = np.asarray(obj.get("xyz", [0.0, 0.0, 0.0]), dtype=float)
    if xyz.shape != (3,):
        raise ModelError(f"{where}: xyz must be a 3-vector")
    return Pose(rot, xyz)


def _parse_body(obj) -> BodySpec:
    try:
        bid = int(obj["id"])
    except (KeyError, TypeError, ValueError):
        raise ModelError(f"body entry without valid 'id': {obj!r}") from None
    where = f"body {bid}"
    try:
        parent = int(obj["parent"])
        inertia = obj["inertia"]
        mass = float(inertia["mass"])
        J = np.asarray(inertia["J"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"{where}: {exc}") from None
    if J.shape != (3, 3):
        raise ModelError(f"{where}: inertia J must be 3x3")
    com = np.asarray(inertia.get("com_offset", [0, 0, 0]), dtype=float)
    if np.any(com != 0.0):
        raise ModelError(f"{where}: com_offset must be zero "
                         "(frames sit at the CoM)")
    pose = _parse_pose(obj.get("A", {}), where)
    joint = None
    if "joint" in obj:
        jo = obj["joint"]
        try:
            joint = JointSpec(kind=jo["kind"],
                              axis=np.asarray(jo["axis"], dtype=float),
                              point=np.asarray(jo.get("point", [0, 0, 0]),
                                               dtype=float))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"{where}: joint: {exc}") from None
        except ModelError as exc:
            raise ModelError(f"{where}: {exc}") from None
    elif parent != 0:
        raise ModelError(f"{where}: non-base body needs a joint")
    return BodySpec(id=bid, parent=parent, A_parent_child=pose,
                    inertia_body=inertia_matrix(mass, J), joint=joint)


def loads_model(text: str) -> RobotModel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"not valid JSON: line {exc.lineno} col {exc.colno}: "
                         f"{exc.msg}") from None
    if not isinstance(obj, dict) or "bodies" not in obj:
        raise ModelError("model file must be an object with a 'bodies' list")
    ids = [b.get("id") for b in obj["bodies"]]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise ModelError(f"duplicated body id(s): {dup}")
    specs = [_parse_body(b) for b in obj["bodies"]]
    return build_model(specs, gravity=float(obj.get("gravity", 9.81)))


def load_model(path) -> RobotModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())


def dumps_model(model: RobotModel) -> str:
    """Canonical serialization: bodies sorted by id, rotations as rotmat,
    keys sorted.  save(load(f)) is byte-identical on canonical files."""
    bodies = []
    for s in model.specs:
        mass = float(s.inertia_body[3, 3])
        entry = {
            "id": s.id,
            "parent": s.parent,
            "A": {
                "rotmat": s.A_parent_child.rotation.tolist(),
                "xyz": s.A_parent_child.translation.tolist(),
            },
            "inertia": {
                "mass": mass,
                "com_offset": [0.0, 0.0, 0.0],
                "J": s.inertia_body[:3, :3].tolist(),
            },
        }
        if s.joint is not None:
            entry["joint"] = {
                "kind": s.joint.kind,
                "axis": s.joint.axis.tolist(),
                "point": s.joint.point.tolist(),
            }
        bodies.append(entry)
    return json.dumps({"gravity": model.gravity, "bodies": bodies},
                      indent=2, sort_keys=True) + "\n"


def save_model(model: RobotModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
