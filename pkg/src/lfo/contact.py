"""Contact-state analysis on the Gaussian sphere.

A set of surface-contact normals N_i constrains the feasible motion directions
to the cone {x : N_i . x >= 0}.  The cone's linear span and lineality space
determine one of eight contact-state classes, and registered transitions
between classes name the physical tasks (pick, place, drawer, door).  The same
cone algebra applies to angular-velocity directions for rotational tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from .errors import InvalidInputError
from .geometry import as_vec3, fibonacci_sphere, unit

_EXACT_TOL = 1e-9


class ContactStateClass(Enum):
    FULL_SPHERE = "full_sphere"
    HEMISPHERE = "hemisphere"
    CONVEX_REGION = "convex_region"
    GREAT_CIRCLE = "great_circle"
    HALF_GREAT_CIRCLE = "half_great_circle"
    ANTIPODAL_PAIR = "antipodal_pair"
    SINGLE_POINT = "single_point"
    EMPTY = "empty"

    @property
    def code(self) -> str:
        return _CLASS_CODES[self]


# Short display codes used in task-frame transition fields.
_CLASS_CODES = {
    ContactStateClass.FULL_SPHERE: "NC",       # no contact
    ContactStateClass.HEMISPHERE: "PC",        # partial (one-sided surface) contact
    ContactStateClass.CONVEX_REGION: "CR",
    ContactStateClass.GREAT_CIRCLE: "GC",
    ContactStateClass.HALF_GREAT_CIRCLE: "HG",
    ContactStateClass.ANTIPODAL_PAIR: "AP",    # bidirectional line
    ContactStateClass.SINGLE_POINT: "SP",      # unidirectional ray
    ContactStateClass.EMPTY: "FC",             # fully constrained / immobile
}


@dataclass(frozen=True)
class ContactElement:
    """One surface contact: unit normal pointing into the object's free half-space."""

    normal: tuple[float, float, float]
    point: Optional[tuple[float, float, float]] = None

    def __post_init__(self):
        unit(self.normal, "contact normal", tol=1e-9)


@dataclass(frozen=True)
class FeasibleCone:
    constraints: tuple[tuple[float, float, float], ...]
    cls: ContactStateClass
    generators: tuple[tuple[float, float, float], ...]
    lineality_dim: int
    span_dim: int


def _rank_and_null(N: np.ndarray, tol: float = 1e-9) -> tuple[int, np.ndarray]:
    """Numerical rank of N and an orthonormal basis of its null space (rows)."""
    if N.size == 0:
        return 0, np.eye(3)
    _, s, vt = np.linalg.svd(N)
    rank = int(np.sum(s > tol * max(1.0, s[0] if len(s) else 1.0)))
    return rank, vt[rank:]


def _implicit_equalities(N: np.ndarray) -> np.ndarray:
    """Boolean mask of constraints that hold with equality on the whole cone.

    Constraint i is an implicit equality iff -N_i lies in the cone generated by
    all normals (Farkas); tested with non-negative least squares.
    """
    m = len(N)
    mask = np.zeros(m, dtype=bool)
    A = N.T
    for i in range(m):
        lam, _ = nnls(A, -N[i])
        # recompute the residual: scipy's reported rnorm is unreliable for
        # some inputs (returns 0.0 with a clearly non-zero residual)
        mask[i] = float(np.linalg.norm(A @ lam + N[i])) < 1e-8
    return mask


def _classify(span_dim: int, lineality_dim: int) -> ContactStateClass:
    table = {
        (3, 3): ContactStateClass.FULL_SPHERE,
        (3, 2): ContactStateClass.HEMISPHERE,
        (3, 1): ContactStateClass.CONVEX_REGION,
        (3, 0): ContactStateClass.CONVEX_REGION,
        (2, 2): ContactStateClass.GREAT_CIRCLE,
        (2, 1): ContactStateClass.HALF_GREAT_CIRCLE,
        (2, 0): ContactStateClass.HALF_GREAT_CIRCLE,
        (1, 1): ContactStateClass.ANTIPODAL_PAIR,
        (1, 0): ContactStateClass.SINGLE_POINT,
        (0, 0): ContactStateClass.EMPTY,
    }
    try:
        return table[(span_dim, lineality_dim)]
    except KeyError:
        raise InvalidInputError(
            f"inconsistent cone dimensions span={span_dim} lineality={lineality_dim}"
        )


def _feasible(N: np.ndarray, x: np.ndarray, tol: float = _EXACT_TOL) -> bool:
    return bool(N.size == 0 or np.all(N @ x >= -tol))


def _dedupe_rays(rays: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for r in rays:
        if not any(np.dot(r, o) > 1.0 - 1e-9 for o in out):
            out.append(r)
    return out


def _pointed_generators(N: np.ndarray, basis: np.ndarray) -> list[np.ndarray]:
    """Extreme rays of the pointed cone C intersected with the subspace spanned
    by the orthonormal rows of `basis` (dimension 1..3)."""
    k = len(basis)
    if k == 0:
        return []
    if k == 1:
        v = basis[0]
        if _feasible(N, v):
            return [v]
        if _feasible(N, -v):
            return [-v]
        return []
    if k == 2:
        u1, u2 = basis
        eff = []
        for n in N:
            a = np.array([np.dot(n, u1), np.dot(n, u2)])
            if np.linalg.norm(a) > 1e-9:
                eff.append(a / np.linalg.norm(a))
        cands = []
        for a in eff:
            for t in (np.array([-a[1], a[0]]), np.array([a[1], -a[0]])):
                if all(np.dot(b, t) >= -_EXACT_TOL for b in eff):
                    cands.append(t)
        cands3 = _dedupe_rays([c[0] * u1 + c[1] * u2 for c in cands])
        cands3 = [c for c in cands3 if _feasible(N, c)]
        if len(cands3) <= 2:
            return cands3
        best, pair = -2.0, cands3[:2]
        for i in range(len(cands3)):
            for j in range(i + 1, len(cands3)):
                sep = -float(np.dot(cands3[i], cands3[j]))
                if sep > best:
                    best, pair = sep, [cands3[i], cands3[j]]
        return pair
    # k == 3: extreme rays lie on intersections of pairs of constraint planes
    rays = []
    m = len(N)
    for i in range(m):
        for j in range(i + 1, m):
            c = np.cross(N[i], N[j])
            nc = np.linalg.norm(c)
            if nc < 1e-12:
                continue
            for r in (c / nc, -c / nc):
                if _feasible(N, r):
                    active = [n for n in N if abs(np.dot(n, r)) <= 1e-9]
                    if len(active) >= 2 and np.linalg.matrix_rank(np.array(active), tol=1e-9) >= 2:
                        rays.append(r)
    return _dedupe_rays(rays)


def feasible_cone(normals: Iterable) -> FeasibleCone:
    """Solution set {x : N_i . x >= 0} with its class and extreme directions.

    An empty constraint list yields the full sphere.  Generators are the
    lineality basis (both signs) plus the extreme rays of the pointed part;
    their non-negative span is the cone.
    """
    nlist = [unit(n, "constraint normal", tol=1e-9) for n in normals]
    N = np.array(nlist).reshape(-1, 3) if nlist else np.zeros((0, 3))
    rank, null_basis = _rank_and_null(N)
    lineality_dim = 3 - rank

    if len(N) == 0:
        gens = [e for v in np.eye(3) for e in (v, -v)]
        return FeasibleCone((), ContactStateClass.FULL_SPHERE,
                            tuple(tuple(g) for g in gens), 3, 3)

    implicit = _implicit_equalities(N)
    NE = N[implicit]
    span_rank, span_basis = _rank_and_null(NE)  # span = null space of implicit normals
    span_dim = 3 - span_rank if len(NE) else 3
    if len(NE) == 0:
        span_basis = np.eye(3)
    cls = _classify(span_dim, lineality_dim)

    generators: list[np.ndarray] = []
    for v in null_basis:
        generators.extend((v, -v))
    if span_dim > lineality_dim:
        # orthonormal basis of (span  ∩ lineality-complement)
        P = span_basis.T
        if lineality_dim:
            L = null_basis.T
            P = P - L @ (L.T @ P)
        q, r = np.linalg.qr(P)
        keep = [q[:, i] for i in range(q.shape[1]) if abs(r[i, i]) > 1e-9]
        basis = np.array(keep) if keep else np.zeros((0, 3))
        generators.extend(_pointed_generators(N, basis))

    generators = sorted(generators, key=lambda g: tuple(np.round(g, 9)))
    return FeasibleCone(
        tuple(tuple(n) for n in N),
        cls,
        tuple(tuple(float(x) for x in g) for g in generators),
        lineality_dim,
        span_dim,
    )


def classify_state(cone: FeasibleCone) -> ContactStateClass:
    """Contact-state class from the cone's span and lineality dimensions."""
    return _classify(cone.span_dim, cone.lineality_dim)


def sample_feasible_oracle(normals: Iterable, n: int, tol: float = _EXACT_TOL) -> np.ndarray:
    """Brute-force membership oracle: Fibonacci-sphere directions that satisfy
    every constraint within tol.  Exposed so tests can compare measure and
    membership against classify_state."""
    if n < 1:
        raise InvalidInputError("sample count must be >= 1")
    nlist = [unit(v, "constraint normal", tol=1e-9) for v in normals]
    pts = fibonacci_sphere(n)
    if not nlist:
        return pts
    N = np.array(nlist)
    mask = np.all(pts @ N.T >= -tol, axis=1)
    return pts[mask]


# ---------------------------------------------------------------------------
# Task types and transitions


class MotionKind(Enum):
    TRANSLATION = "translation"
    ROTATION = "rotation"
    SEMANTIC = "semantic"


class TaskType(Enum):
    GRASP = "grasp"
    PTG11 = "ptg11"
    PTG13 = "ptg13"
    PTG31 = "ptg31"
    PTG33 = "ptg33"
    PTG51 = "ptg51"
    PTG53 = "ptg53"
    STG12 = "stg12"
    RELEASE = "release"

    @property
    def label(self) -> str:
        return _TASK_LABELS[self]


_TASK_LABELS = {
    TaskType.GRASP: "Grasp",
    TaskType.PTG11: "Pick (PTG11)",
    TaskType.PTG13: "Place (PTG13)",
    TaskType.PTG31: "Drawer-open (PTG31)",
    TaskType.PTG33: "Drawer-close (PTG33)",
    TaskType.PTG51: "Door-open (PTG51)",
    TaskType.PTG53: "Door-close (PTG53)",
    TaskType.STG12: "Bring-carefully (STG12)",
    TaskType.RELEASE: "Release",
}


@dataclass(frozen=True)
class TaskEntry:
    task: TaskType
    motion: MotionKind
    before: Optional[ContactStateClass]
    after: Optional[ContactStateClass]
    inverse: Optional[TaskType] = None


class TaskRegistry:
    """Immutable lookup from (motion kind, before class, after class) to task."""

    def __init__(self, entries: Sequence[TaskEntry]):
        tasks = [e.task for e in entries]
        if len(set(tasks)) != len(tasks):
            raise InvalidInputError("duplicate task in registry")
        self._by_task: Mapping[TaskType, TaskEntry] = {e.task: e for e in entries}
        self._by_transition = {}
        for e in entries:
            if e.before is not None and e.after is not None and e.motion is not MotionKind.SEMANTIC:
                key = (e.motion, e.before, e.after)
                if key in self._by_transition:
                    raise InvalidInputError(f"duplicate transition {key}")
                self._by_transition[key] = e.task
        for e in entries:
            if e.inverse is not None:
                inv = self._by_task.get(e.inverse)
                if inv is None or inv.inverse is not e.task:
                    raise InvalidInputError(f"{e.task} declares unpaired inverse {e.inverse}")

    def entry(self, task: TaskType) -> TaskEntry:
        try:
            return self._by_task[task]
        except KeyError:
            raise InvalidInputError(f"task {task} not registered")

    def entries(self) -> tuple[TaskEntry, ...]:
        return tuple(self._by_task.values())

    def lookup(self, motion: MotionKind, before: ContactStateClass,
               after: ContactStateClass) -> Optional[TaskType]:
        return self._by_transition.get((motion, before, after))

    def with_entry(self, entry: TaskEntry) -> "TaskRegistry":
        return TaskRegistry(list(self._by_task.values()) + [entry])


_C = ContactStateClass
DEFAULT_REGISTRY = TaskRegistry([
    TaskEntry(TaskType.GRASP, MotionKind.SEMANTIC, None, None),
    TaskEntry(TaskType.RELEASE, MotionKind.SEMANTIC, None, None),
    TaskEntry(TaskType.PTG11, MotionKind.TRANSLATION, _C.HEMISPHERE, _C.FULL_SPHERE,
              inverse=TaskType.PTG13),
    TaskEntry(TaskType.PTG13, MotionKind.TRANSLATION, _C.FULL_SPHERE, _C.HEMISPHERE,
              inverse=TaskType.PTG11),
    TaskEntry(TaskType.PTG31, MotionKind.TRANSLATION, _C.SINGLE_POINT, _C.ANTIPODAL_PAIR,
              inverse=TaskType.PTG33),
    TaskEntry(TaskType.PTG33, MotionKind.TRANSLATION, _C.ANTIPODAL_PAIR, _C.SINGLE_POINT,
              inverse=TaskType.PTG31),
    TaskEntry(TaskType.PTG51, MotionKind.ROTATION, _C.SINGLE_POINT, _C.ANTIPODAL_PAIR,
              inverse=TaskType.PTG53),
    TaskEntry(TaskType.PTG53, MotionKind.ROTATION, _C.ANTIPODAL_PAIR, _C.SINGLE_POINT,
              inverse=TaskType.PTG51),
    TaskEntry(TaskType.STG12, MotionKind.SEMANTIC, _C.FULL_SPHERE, _C.FULL_SPHERE),
])


def classify_transition(before: FeasibleCone | ContactStateClass,
                        after: FeasibleCone | ContactStateClass,
                        motion_kind: MotionKind,
                        registry: TaskRegistry = DEFAULT_REGISTRY) -> Optional[TaskType]:
    """Name the task whose registered (motion, before, after) matches, else None."""
    b = before if isinstance(before, ContactStateClass) else classify_state(before)
    a = after if isinstance(after, ContactStateClass) else classify_state(after)
    return registry.lookup(motion_kind, b, a)


# ---------------------------------------------------------------------------
# Semantic constraints


@dataclass(frozen=True)
class Pose:
    """Position + rotation matrix at a timestamp."""

    time: float
    position: tuple[float, float, float]
    rotation: tuple[tuple[float, float, float], ...] = (
        (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def pos(self) -> np.ndarray:
        return as_vec3(self.position, "position")

    def rot(self) -> np.ndarray:
        R = np.asarray(self.rotation, float)
        if R.shape != (3, 3):
            raise InvalidInputError("rotation must be 3x3")
        return R


@dataclass(frozen=True)
class Ping:
    """Only rotation about the given axis is allowed (e.g. carrying a glass)."""

    axis: tuple[float, float, float]


@dataclass(frozen=True)
class Wall:
    """Positions stay within [0, thickness] signed distance of the plane."""

    normal: tuple[float, float, float]
    offset: float
    thickness: float


@dataclass(frozen=True)
class Tube:
    """Positions stay within radius of a polyline path."""

    path: tuple[tuple[float, float, float], ...]
    radius: float


@dataclass(frozen=True)
class SphereShell:
    """Radial distance from center stays within [inner, inner + shell]."""

    center: tuple[float, float, float]
    inner: float
    shell: float


@dataclass(frozen=True)
class Hinge:
    """All poses are rotations of the first pose about a fixed axis line."""

    axis_point: tuple[float, float, float]
    axis_dir: tuple[float, float, float]


SemanticConstraint = Ping | Wall | Tube | SphereShell | Hinge


@dataclass(frozen=True)
class ConstraintReport:
    ok: bool
    violation_time: Optional[float] = None
    reason: str = ""


def _point_polyline_distance(p: np.ndarray, path: np.ndarray) -> float:
    best = np.inf
    for a, b in zip(path, path[1:]):
        d = b - a
        L2 = float(np.dot(d, d))
        t = 0.0 if L2 == 0 else float(np.clip(np.dot(p - a, d) / L2, 0.0, 1.0))
        best = min(best, float(np.linalg.norm(p - (a + t * d))))
    if len(path) == 1:
        best = float(np.linalg.norm(p - path[0]))
    return best


def _rotation_angle_off_axis(R: np.ndarray, axis: np.ndarray) -> float:
    """Angle by which R moves the axis (0 when R is a rotation about axis)."""
    moved = R @ axis
    return float(np.arccos(np.clip(np.dot(moved, axis), -1.0, 1.0)))


def check_semantic_constraint(trajectory: Sequence[Pose], c: SemanticConstraint,
                              linear_tol: float = 1e-3,
                              angular_tol: float = np.radians(5.0)) -> ConstraintReport:
    """Validate a timed pose sequence against one semantic constraint.

    Returns ok, or the first violating time with a reason.  Ping/Hinge checks
    are relative to the trajectory's first pose.
    """
    if not trajectory:
        raise InvalidInputError("trajectory is empty")
    if isinstance(c, Ping):
        axis = unit(c.axis, "ping axis")
        R0 = trajectory[0].rot()
        for pose in trajectory:
            off = _rotation_angle_off_axis(pose.rot() @ R0.T, axis)
            if off > angular_tol:
                return ConstraintReport(False, pose.time,
                                        f"rotation off the ping axis by {np.degrees(off):.1f} deg")
        return ConstraintReport(True)
    if isinstance(c, Wall):
        n = unit(c.normal, "wall normal")
        if c.thickness <= 0:
            raise InvalidInputError("wall thickness must be > 0")
        for pose in trajectory:
            s = float(np.dot(n, pose.pos())) - c.offset
            if s < -linear_tol or s > c.thickness + linear_tol:
                return ConstraintReport(False, pose.time,
                                        f"signed distance {s:.4f} m outside [0, {c.thickness}]")
        return ConstraintReport(True)
    if isinstance(c, Tube):
        if c.radius <= 0:
            raise InvalidInputError("tube radius must be > 0")
        path = np.array([as_vec3(p, "tube path point") for p in c.path])
        for pose in trajectory:
            d = _point_polyline_distance(pose.pos(), path)
            if d > c.radius + linear_tol:
                return ConstraintReport(False, pose.time,
                                        f"distance {d:.4f} m from the tube path exceeds {c.radius}")
        return ConstraintReport(True)
    if isinstance(c, SphereShell):
        if c.inner < 0 or c.shell <= 0:
            raise InvalidInputError("sphere shell needs inner >= 0 and shell > 0")
        center = as_vec3(c.center, "sphere center")
        for pose in trajectory:
            r = float(np.linalg.norm(pose.pos() - center))
            if r < c.inner - linear_tol or r > c.inner + c.shell + linear_tol:
                return ConstraintReport(False, pose.time,
                                        f"radius {r:.4f} m outside [{c.inner}, {c.inner + c.shell}]")
        return ConstraintReport(True)
    if isinstance(c, Hinge):
        axis = unit(c.axis_dir, "hinge axis")
        anchor = as_vec3(c.axis_point, "hinge axis point")
        p0 = trajectory[0].pos() - anchor
        ax0, rad0 = float(np.dot(p0, axis)), p0 - np.dot(p0, axis) * axis
        R0 = trajectory[0].rot()
        for pose in trajectory:
            p = pose.pos() - anchor
            axial = float(np.dot(p, axis))
            radial = p - axial * axis
            if abs(axial - ax0) > linear_tol:
                return ConstraintReport(False, pose.time,
                                        f"moved {abs(axial - ax0):.4f} m along the hinge axis")
            if abs(np.linalg.norm(radial) - np.linalg.norm(rad0)) > linear_tol:
                return ConstraintReport(False, pose.time, "hinge radius changed")
            off = _rotation_angle_off_axis(pose.rot() @ R0.T, axis)
            if off > angular_tol:
                return ConstraintReport(False, pose.time,
                                        f"orientation off the hinge axis by {np.degrees(off):.1f} deg")
        return ConstraintReport(True)
    raise InvalidInputError(f"unknown semantic constraint variant {type(c).__name__}")


def constraint_to_dict(c: SemanticConstraint) -> dict:
    if isinstance(c, Ping):
        return {"type": "ping", "axis": list(c.axis)}
    if isinstance(c, Wall):
        return {"type": "wall", "normal": list(c.normal), "offset": c.offset,
                "thickness": c.thickness}
    if isinstance(c, Tube):
        return {"type": "tube", "path": [list(p) for p in c.path], "radius": c.radius}
    if isinstance(c, SphereShell):
        return {"type": "sphere", "center": list(c.center), "inner": c.inner,
                "shell": c.shell}
    if isinstance(c, Hinge):
        return {"type": "hinge", "axis_point": list(c.axis_point),
                "axis_dir": list(c.axis_dir)}
    raise InvalidInputError(f"unknown semantic constraint variant {type(c).__name__}")


def constraint_from_dict(doc: Mapping) -> SemanticConstraint:
    kind = doc.get("type")
    try:
        if kind == "ping":
            return Ping(tuple(map(float, doc["axis"])))
        if kind == "wall":
            return Wall(tuple(map(float, doc["normal"])), float(doc["offset"]),
                        float(doc["thickness"]))
        if kind == "tube":
            return Tube(tuple(tuple(map(float, p)) for p in doc["path"]),
                        float(doc["radius"]))
        if kind == "sphere":
            return SphereShell(tuple(map(float, doc["center"])), float(doc["inner"]),
                               float(doc["shell"]))
        if kind == "hinge":
            return Hinge(tuple(map(float, doc["axis_point"])),
                         tuple(map(float, doc["axis_dir"])))
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidInputError(f"malformed {kind!r} constraint: {e}")
    raise InvalidInputError(f"unknown semantic constraint type {kind!r}")
