"""Quasi-static world model: superquadric objects on surfaces, hinged and
prismatic mechanisms, and the contact cones their attachments imply."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..contact import ContactStateClass, FeasibleCone, MotionKind, classify_state, feasible_cone
from ..errors import InvalidInputError
from ..geometry import as_vec3, normalized, orthonormal_basis_from
from ..grasp import SuperquadricParams

_LIMIT_TOL = 1e-6


@dataclass(frozen=True)
class Surface:
    """Axis-aligned horizontal support rectangle at a fixed height."""

    name: str
    height: float
    center: tuple[float, float]
    size: tuple[float, float]

    def contains(self, x: float, y: float) -> bool:
        return (abs(x - self.center[0]) <= self.size[0] / 2 + 1e-9
                and abs(y - self.center[1]) <= self.size[1] / 2 + 1e-9)


@dataclass
class Attachment:
    kind: str  # "free" | "on_surface" | "hinged" | "prismatic"
    surface: Optional[str] = None
    axis_point: Optional[tuple[float, float, float]] = None
    axis_dir: Optional[tuple[float, float, float]] = None
    limits: tuple[float, float] = (0.0, 0.0)
    value: float = 0.0  # hinge angle (rad) or prismatic offset (m)
    face_point: Optional[tuple[float, float, float]] = None
    face_normal: Optional[tuple[float, float, float]] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.surface:
            d["surface"] = self.surface
        if self.axis_point is not None:
            d.update(axis_point=list(self.axis_point), axis_dir=list(self.axis_dir),
                     limits=list(self.limits), value=self.value)
        return d

    def at_lower_limit(self) -> bool:
        return self.value <= self.limits[0] + _LIMIT_TOL

    def at_upper_limit(self) -> bool:
        return self.value >= self.limits[1] - _LIMIT_TOL


@dataclass
class WorldObject:
    name: str
    shape: SuperquadricParams  # pose = current world pose
    attachment: Attachment
    held: bool = False
    visible: bool = True
    base_shape: Optional[SuperquadricParams] = None  # mechanism pose at value 0

    def __post_init__(self):
        if self.base_shape is None:
            self.base_shape = self.shape

    @property
    def position(self) -> np.ndarray:
        return self.shape.trans()

    def bottom_z(self) -> float:
        # fixture objects stay upright; the support gap uses the z semi-axis
        return float(self.shape.translation[2] - self.shape.a[2])

    def attachment_state(self) -> dict:
        d = self.attachment.to_dict()
        if self.attachment.kind == "free" and self.held:
            d["kind"] = "in_hand"
        return d


@dataclass
class WorldState:
    surfaces: dict[str, Surface] = field(default_factory=dict)
    objects: dict[str, WorldObject] = field(default_factory=dict)

    def copy(self) -> "WorldState":
        return copy.deepcopy(self)

    def object(self, name: str) -> WorldObject:
        try:
            return self.objects[name]
        except KeyError:
            raise InvalidInputError(f"no object named {name!r} in the world")

    def surface_below(self, obj: WorldObject) -> Optional[Surface]:
        """Highest surface under the object's footprint at or below its base."""
        x, y, _ = obj.shape.translation
        best = None
        for s in self.surfaces.values():
            if s.contains(x, y) and s.height <= obj.bottom_z() + 1e-6:
                if best is None or s.height > best.height:
                    best = s
        return best

    def move_object(self, name: str, new_position) -> None:
        obj = self.object(name)
        obj.shape = replace(obj.shape, translation=tuple(float(x) for x in new_position))

    def set_mechanism_value(self, name: str, value: float) -> None:
        """Drive a hinged/prismatic object to a new angle/offset (clamped)."""
        obj = self.object(name)
        att = obj.attachment
        if att.kind not in ("hinged", "prismatic"):
            raise InvalidInputError(f"object {name!r} has no mechanism")
        value = float(np.clip(value, att.limits[0], att.limits[1]))
        base = obj.base_shape
        axis = normalized(att.axis_dir, "axis")
        if att.kind == "prismatic":
            t = base.trans() + axis * value
            obj.shape = replace(base, translation=tuple(t))
        else:
            anchor = as_vec3(att.axis_point, "axis point")
            R = _axis_rotation(axis, value)
            t = anchor + R @ (base.trans() - anchor)
            rot = R @ base.rot()
            obj.shape = replace(base, translation=tuple(t), rotation=tuple(map(tuple, rot)))
        att.value = value

    def mechanism_point_at(self, name: str, point_at_zero: np.ndarray, value: float) -> np.ndarray:
        """Where a point rigidly attached to the mechanism sits at a given value."""
        obj = self.object(name)
        att = obj.attachment
        axis = normalized(att.axis_dir, "axis")
        if att.kind == "prismatic":
            return point_at_zero + axis * value
        anchor = as_vec3(att.axis_point, "axis point")
        return anchor + _axis_rotation(axis, value) @ (point_at_zero - anchor)


def _axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    k = axis / np.linalg.norm(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


def attachment_cone(att: dict, motion: MotionKind) -> FeasibleCone:
    """Feasible cone the attachment implies for the object's environment
    contact, under the given motion kind (held state does not change it)."""
    kind = att.get("kind", "free")
    if kind in ("free", "in_hand"):
        return feasible_cone([])
    if kind == "on_surface":
        if motion is MotionKind.ROTATION:
            return feasible_cone([])
        return feasible_cone([(0.0, 0.0, 1.0)])
    if kind in ("hinged", "prismatic"):
        axis = normalized(att["axis_dir"], "axis")
        b1, b2 = orthonormal_basis_from(axis)
        moving = MotionKind.ROTATION if kind == "hinged" else MotionKind.TRANSLATION
        normals = [b1, -b1, b2, -b2]
        if motion is not moving:
            return feasible_cone(normals + [axis, -axis])  # rigid in that sense
        lo, hi = att.get("limits", (0.0, 0.0))
        value = att.get("value", 0.0)
        if value <= lo + _LIMIT_TOL:
            normals.append(axis)
        elif value >= hi - _LIMIT_TOL:
            normals.append(-axis)
        return feasible_cone(normals)
    raise InvalidInputError(f"unknown attachment kind {kind!r}")


def attachment_class(att: dict, motion: MotionKind) -> ContactStateClass:
    return classify_state(attachment_cone(att, motion))


# ---------------------------------------------------------------------------
# World file format


def world_from_dict(doc: dict) -> WorldState:
    if not isinstance(doc, dict) or doc.get("kind") != "world":
        raise InvalidInputError("not a world document")
    world = WorldState()
    for s in doc.get("surfaces", []):
        surf = Surface(s["name"], float(s["height"]),
                       tuple(map(float, s["center"])), tuple(map(float, s["size"])))
        world.surfaces[surf.name] = surf
    for o in doc.get("objects", []):
        shape_doc = o["shape"]
        pose = o.get("pose", {})
        if "rotation" in pose:
            R = np.asarray(pose["rotation"], float)
        else:
            rpy = [math.radians(a) for a in pose.get("rpy_deg", (0, 0, 0))]
            R = (_axis_rotation(np.array([0.0, 0.0, 1.0]), rpy[2])
                 @ _axis_rotation(np.array([0.0, 1.0, 0.0]), rpy[1])
                 @ _axis_rotation(np.array([1.0, 0.0, 0.0]), rpy[0]))
        shape = SuperquadricParams(
            tuple(map(float, shape_doc["a"])), tuple(map(float, shape_doc["e"])),
            tuple(map(tuple, R)), tuple(map(float, pose.get("position", (0, 0, 0)))),
        )
        att_doc = o.get("attachment", {"kind": "free"})
        kind = att_doc.get("kind", "free")
        att = Attachment(kind=kind, surface=att_doc.get("surface"))
        if kind in ("hinged", "prismatic"):
            att.axis_point = tuple(map(float, att_doc["axis_point"]))
            att.axis_dir = tuple(map(float, att_doc["axis_dir"]))
            if "range_deg" in att_doc:
                att.limits = tuple(math.radians(a) for a in att_doc["range_deg"])
                att.value = math.radians(float(att_doc.get("angle_deg", 0.0)))
            else:
                att.limits = tuple(map(float, att_doc.get("range", (0.0, 0.0))))
                att.value = float(att_doc.get("offset", 0.0))
            if "face_point" in att_doc:
                att.face_point = tuple(map(float, att_doc["face_point"]))
                att.face_normal = tuple(map(float, att_doc["face_normal"]))
        obj = WorldObject(
            name=o["name"], shape=shape, attachment=att,
            visible=bool(o.get("visible", True)),
        )
        if att.kind in ("hinged", "prismatic") and not (
                att.limits[0] - 1e-9 <= att.value <= att.limits[1] + 1e-9):
            raise InvalidInputError(
                f"object {obj.name!r}: mechanism value {att.value} outside "
                f"range {att.limits}")
        if att.kind == "on_surface":
            support = world.surfaces.get(att.surface or "")
            if support is None:
                raise InvalidInputError(
                    f"object {obj.name!r} rests on unknown surface {att.surface!r}")
            if abs(obj.bottom_z() - support.height) > 1e-6:
                raise InvalidInputError(
                    f"object {obj.name!r} does not touch surface {att.surface!r} "
                    f"(gap {obj.bottom_z() - support.height:+.6f} m)")
        world.objects[o["name"]] = obj
    return world


def world_to_dict(world: WorldState) -> dict:
    surfaces = [
        {"name": s.name, "height": s.height, "center": list(s.center),
         "size": list(s.size)}
        for s in world.surfaces.values()
    ]
    objects = []
    for o in world.objects.values():
        att = o.attachment
        att_doc: dict = {"kind": att.kind}
        if att.surface:
            att_doc["surface"] = att.surface
        if att.kind in ("hinged", "prismatic"):
            att_doc.update(axis_point=list(att.axis_point), axis_dir=list(att.axis_dir))
            if att.kind == "hinged":
                att_doc["range_deg"] = [math.degrees(v) for v in att.limits]
                att_doc["angle_deg"] = math.degrees(att.value)
            else:
                att_doc["range"] = list(att.limits)
                att_doc["offset"] = att.value
            if att.face_point is not None:
                att_doc["face_point"] = list(att.face_point)
                att_doc["face_normal"] = list(att.face_normal)
        objects.append({
            "name": o.name,
            "shape": {"a": list(o.shape.a), "e": list(o.shape.e)},
            "pose": {"position": list(o.shape.translation),
                     "rotation": [list(r) for r in o.shape.rotation]},
            "attachment": att_doc,
            "visible": o.visible,
            "held": o.held,
        })
    return {"version": 1, "kind": "world", "surfaces": surfaces, "objects": objects}
