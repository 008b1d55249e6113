"""Runtime re-observation: synthesize a depth cloud of the target object plus
its background plane, segment the plane out, recover the superquadric, and
recompute the contact web in the fitted frame."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import FitError, LocalizationError
from ..geometry import as_vec3, normalized
from ..grasp import (
    ClosureType,
    DEFAULT_GRIPPER,
    GripperSpec,
    SuperquadricParams,
    canonicalize_upright,
    compute_contact_web,
    fit_superquadric,
    ransac_plane,
    sample_cloud,
)
from .world import WorldObject, WorldState, _axis_rotation


@dataclass(frozen=True)
class LocalizeResult:
    params: SuperquadricParams
    web_points: tuple[tuple[float, float, float], ...]   # world frame
    web_normals: tuple[tuple[float, float, float], ...]  # world frame, inward
    approach: tuple[float, float, float]                  # world frame, outward
    center: tuple[float, float, float]


def _background_plane(world: WorldState, obj: WorldObject):
    att = obj.attachment
    if att.kind == "on_surface" and att.surface in world.surfaces:
        s = world.surfaces[att.surface]
        origin = np.array([obj.shape.translation[0], obj.shape.translation[1], s.height])
        return np.array([0.0, 0.0, 1.0]), origin
    if att.kind == "hinged" and att.face_point is not None:
        axis = normalized(att.axis_dir, "axis")
        R = _axis_rotation(axis, att.value)
        anchor = as_vec3(att.axis_point, "axis point")
        origin = anchor + R @ (as_vec3(att.face_point, "face point") - anchor)
        normal = R @ normalized(att.face_normal, "face normal")
        return normal, origin
    if att.kind == "prismatic" and att.face_point is not None:
        axis = normalized(att.axis_dir, "axis")
        origin = as_vec3(att.face_point, "face point") + axis * att.value
        return normalized(att.face_normal, "face normal"), origin
    return None


def _plane_patch(normal: np.ndarray, origin: np.ndarray, half: float = 0.12,
                 n: int = 20) -> np.ndarray:
    ref = np.array([0.0, 0.0, 1.0]) if abs(normal[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(normal, ref)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    g = np.linspace(-half, half, n)
    uu, vv = np.meshgrid(g, g)
    return origin + uu.reshape(-1, 1) * u + vv.reshape(-1, 1) * v


def runtime_localize(world: WorldState, object_name: str, camera,
                     closure: ClosureType, gripper: GripperSpec = DEFAULT_GRIPPER,
                     seed: int = 0, n_points: int = 400) -> LocalizeResult:
    """Re-observe an object at execution time and recompute its grasp.

    The view is the camera-to-object geometry; the synthesized cloud is the
    object's true (current) surface plus its background plane, mirroring what
    a depth sensor would return.
    """
    obj = world.object(object_name)
    if not obj.visible:
        raise LocalizationError(f"object {object_name!r} is occluded (zero visible points)")
    cam = as_vec3(camera, "camera")
    rel = cam - obj.shape.trans()
    dist = float(np.linalg.norm(rel))
    if dist < 1e-6:
        raise LocalizationError("camera coincides with the object")
    az = math.degrees(math.atan2(rel[1], rel[0]))
    zen = math.degrees(math.acos(float(np.clip(rel[2] / dist, -1, 1))))
    cloud = sample_cloud(obj.shape, az, zen, n_points, noise_sigma=0.0, seed=seed)

    bg = _background_plane(world, obj)
    if bg is not None:
        normal, origin = bg
        patch = _plane_patch(normal, origin)
        full = np.vstack([cloud, patch])
        plane = ransac_plane(full, inlier_threshold=0.004, iterations=200, seed=seed)
        if plane is None:
            raise LocalizationError("background plane segmentation failed")
        mask = np.ones(len(full), dtype=bool)
        mask[list(plane.inliers)] = False
        cloud = full[mask]
    if len(cloud) < 10:
        raise LocalizationError(f"object {object_name!r} left too few points after segmentation")

    try:
        params = fit_superquadric(cloud)
    except FitError as e:
        raise LocalizationError(f"shape recovery failed: {e}")
    params = canonicalize_upright(params)

    web = compute_contact_web(params, closure, gripper)
    R = params.rot()
    pts = tuple(tuple(params.to_world_frame(np.asarray(p))[0]) for p, _ in web.contacts)
    normals = tuple(tuple(R @ np.asarray(nrm)) for _, nrm in web.contacts)
    approach = R @ np.asarray(web.approach)
    if closure is ClosureType.PASSIVE_FORM:
        # parallel webs are approach-symmetric; come in along the mounting
        # plane's normal (camera side) so the hand clears the surface
        if bg is not None:
            normal, _ = bg
            approach = normal if float(np.dot(normal, rel)) >= 0 else -normal
        elif float(np.dot(approach, rel)) < 0:
            approach = -approach
    center = tuple(np.mean(np.asarray(pts), axis=0))
    return LocalizeResult(params, pts, normals,
                          tuple(float(x) for x in approach), center)
