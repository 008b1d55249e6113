"""Superquadric object models, recovery from point clouds, and contact webs.

Objects are superquadrics F(p) = (|x/a1|^(2/e2) + |y/a2|^(2/e2))^(e2/e1)
+ |z/a3|^(2/e1) in the object frame (< 1 inside, 1 on the surface).  Contact
webs place gripper contacts analytically on principal cross-sections for the
three closure objectives, and a 6D wrench convex-hull test checks force
closure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import ConvexHull, QhullError

from .errors import FitError, InfeasibleGraspError, InvalidInputError
from .geometry import as_vec3, normalized, orthonormal_basis_from

_E_MIN, _E_MAX = 0.05, 2.0  # optimizer exponent box; randomized draws stay in (0, 1]


@dataclass(frozen=True)
class SuperquadricParams:
    """Semi-axes (m), shape exponents, and rigid pose (rotation, translation)."""

    a: tuple[float, float, float]
    e: tuple[float, float]
    rotation: tuple[tuple[float, float, float], ...] = (
        (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if any(ai <= 0 for ai in self.a):
            raise InvalidInputError(f"semi-axes must be > 0, got {self.a}")
        if any(not (0 < ei <= 2) for ei in self.e):
            raise InvalidInputError(f"exponents must be in (0, 2], got {self.e}")
        R = np.asarray(self.rotation, float)
        if R.shape != (3, 3) or not np.allclose(R @ R.T, np.eye(3), atol=1e-6):
            raise InvalidInputError("rotation must be orthonormal 3x3")

    def rot(self) -> np.ndarray:
        return np.asarray(self.rotation, float)

    def trans(self) -> np.ndarray:
        return np.asarray(self.translation, float)

    def to_object_frame(self, pts: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(pts) - self.trans()) @ self.rot()

    def to_world_frame(self, pts: np.ndarray) -> np.ndarray:
        return np.atleast_2d(pts) @ self.rot().T + self.trans()


def _implicit_local(a, e, pts: np.ndarray) -> np.ndarray:
    a1, a2, a3 = a
    e1, e2 = e
    x, y, z = np.abs(pts[:, 0] / a1), np.abs(pts[:, 1] / a2), np.abs(pts[:, 2] / a3)
    with np.errstate(over="ignore"):
        inner = x ** (2.0 / e2) + y ** (2.0 / e2)
        f = inner ** (e2 / e1) + z ** (2.0 / e1)
    return np.minimum(f, 1e30)


def implicit_value(q: SuperquadricParams, p) -> float:
    """F(p): < 1 inside, 1 on the surface, > 1 outside."""
    pt = as_vec3(p, "point")
    local = q.to_object_frame(pt)
    return float(_implicit_local(q.a, q.e, local)[0])


def _spow(base: np.ndarray, exp: float) -> np.ndarray:
    return np.sign(base) * np.abs(base) ** exp


def surface_points(q: SuperquadricParams, eta: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Parametric surface samples in the object frame (eta in [-pi/2, pi/2])."""
    a1, a2, a3 = q.a
    e1, e2 = q.e
    ce, se = np.cos(eta), np.sin(eta)
    co, so = np.cos(omega), np.sin(omega)
    x = a1 * _spow(ce, e1) * _spow(co, e2)
    y = a2 * _spow(ce, e1) * _spow(so, e2)
    z = a3 * _spow(se, e1)
    return np.column_stack([x, y, z])


def surface_normals(q: SuperquadricParams, eta: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Outward unit normals of the parametric samples (object frame)."""
    a1, a2, a3 = q.a
    e1, e2 = q.e
    ce, se = np.cos(eta), np.sin(eta)
    co, so = np.cos(omega), np.sin(omega)
    nx = _spow(ce, 2.0 - e1) * _spow(co, 2.0 - e2) / a1
    ny = _spow(ce, 2.0 - e1) * _spow(so, 2.0 - e2) / a2
    nz = _spow(se, 2.0 - e1) / a3
    n = np.column_stack([nx, ny, nz])
    norms = np.linalg.norm(n, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return n / norms


# Randomization ranges for generated clouds: exponents 0..1, sizes 10..30 cm,
# view azimuth within +-120 deg of the front, view zenith 0..90 deg.
RANDOM_E_RANGE = (0.0, 1.0)
RANDOM_A_RANGE = (0.10, 0.30)
RANDOM_AZIMUTH_RANGE = (-120.0, 120.0)
RANDOM_ZENITH_RANGE = (0.0, 90.0)


def random_superquadric(rng: np.random.Generator) -> SuperquadricParams:
    """Draw sizes/exponents uniformly from the randomization ranges (exponents
    floored at 0.01 to keep the surface well-defined)."""
    e = tuple(max(0.01, float(rng.uniform(*RANDOM_E_RANGE))) for _ in range(2))
    a = tuple(float(rng.uniform(*RANDOM_A_RANGE)) for _ in range(3))
    rotvec = rng.normal(size=3)
    angle = float(rng.uniform(0, np.pi))
    R = _rotation_from_rotvec(angle * rotvec / np.linalg.norm(rotvec))
    t = rng.uniform(-0.2, 0.2, size=3)
    return SuperquadricParams(a, e, tuple(map(tuple, R)), tuple(t))


def _rotation_from_rotvec(r: np.ndarray) -> np.ndarray:
    angle = float(np.linalg.norm(r))
    if angle < 1e-12:
        return np.eye(3)
    k = r / angle
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


def view_direction(azimuth_deg: float, zenith_deg: float) -> np.ndarray:
    """Unit vector pointing from the object toward the camera; azimuth 0 is the
    front (+x), zenith 0 is overhead."""
    az, zen = math.radians(azimuth_deg), math.radians(zenith_deg)
    return np.array([math.sin(zen) * math.cos(az), math.sin(zen) * math.sin(az), math.cos(zen)])


def sample_cloud(q: SuperquadricParams, view_azimuth: float, view_zenith: float,
                 n: int, noise_sigma: float = 0.0, seed: int = 0) -> np.ndarray:
    """Visible-side surface samples (world frame) with Gaussian noise along normals.

    Deterministic for a fixed seed; points are culled to the hemisphere whose
    outward normals face the viewing direction.
    """
    if n < 1:
        raise InvalidInputError("sample count must be >= 1")
    rng = np.random.default_rng(seed)
    view = view_direction(view_azimuth, view_zenith)
    pts_out = np.zeros((0, 3))
    guard = 0
    while len(pts_out) < n and guard < 40:
        m = max(64, 4 * (n - len(pts_out)))
        eta = rng.uniform(-np.pi / 2, np.pi / 2, m)
        omega = rng.uniform(-np.pi, np.pi, m)
        pts = surface_points(q, eta, omega)
        nrm = surface_normals(q, eta, omega)
        facing = (nrm @ q.rot().T @ view) > 0  # world-frame normal vs view
        pts, nrm = pts[facing], nrm[facing]
        if noise_sigma > 0:
            pts = pts + nrm * rng.normal(0.0, noise_sigma, size=(len(pts), 1))
        pts_out = np.vstack([pts_out, q.to_world_frame(pts)])
        guard += 1
    if len(pts_out) < n:
        raise FitError("could not sample enough visible surface points")
    return pts_out[:n]


# ---------------------------------------------------------------------------
# Fitting


def _pack(a, e, R, t):
    return np.concatenate([np.log(a), e, _rotvec_from_rotation(R), t])


def _unpack(x):
    a = np.exp(x[0:3])
    e = np.clip(x[3:5], _E_MIN, _E_MAX)
    R = _rotation_from_rotvec(x[5:8])
    t = x[8:11]
    return a, e, R, t


def _rotvec_from_rotation(R: np.ndarray) -> np.ndarray:
    cos_a = (np.trace(R) - 1.0) / 2.0
    angle = math.acos(max(-1.0, min(1.0, cos_a)))
    if angle < 1e-9:
        return np.zeros(3)
    if abs(angle - math.pi) < 1e-6:
        # axis from the symmetric part
        M = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diagonal(M), 0.0))
        axis = axis / np.linalg.norm(axis)
        return axis * angle
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return v / (2.0 * math.sin(angle)) * angle


def _fit_residual(x, pts):
    a, e, R, t = _unpack(x)
    local = (pts - t) @ R
    f = _implicit_local(a, e, local)
    # radial-balanced inside-outside residual
    with np.errstate(over="ignore", invalid="ignore"):
        r = f ** e[0] - 1.0
    return np.nan_to_num(r, nan=1e3, posinf=1e6, neginf=-1e6)


@dataclass(frozen=True)
class FitResult:
    params: SuperquadricParams
    rms: float


def _fit_bounds(centroid: np.ndarray, radius: float):
    """Size and translation boxes keyed to the cloud's extent; blocks the
    degenerate huge-slab solutions a partial view cannot rule out."""
    lo = [math.log(1e-3)] * 3 + [_E_MIN] * 2 + [-2 * math.pi] * 3 + list(centroid - 2 * radius)
    hi = [math.log(3.0 * radius)] * 3 + [_E_MAX] * 2 + [2 * math.pi] * 3 + list(centroid + 2 * radius)
    return lo, hi


_AXIS_PERMS = (
    np.eye(3),
    np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
)


def fit_superquadric(cloud, *, full_result: bool = False):
    """Recover superquadric parameters by damped least squares on the
    radial-balanced inside-outside residual.

    Initialization: centroid + principal axes; multi-start over a coarse
    exponent grid and the three principal-axis relabelings.
    """
    pts = np.asarray(cloud, float).reshape(-1, 3)
    if len(pts) < 10:
        raise FitError(f"need at least 10 points, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise FitError("cloud contains non-finite points")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[2] < 1e-4 * s[0]:
        raise FitError("cloud spread is rank-deficient (planar or linear)")
    R_pca = vt.T
    if np.linalg.det(R_pca) < 0:
        R_pca[:, 2] = -R_pca[:, 2]
    radius = float(np.max(np.linalg.norm(centered, axis=1)))
    bounds = _fit_bounds(centroid, radius)

    sub = pts if len(pts) <= 250 else pts[:: len(pts) // 250 + 1]
    e_grid = (0.2, 0.6, 1.0)
    # a 45-degree in-plane turn escapes the rotated-superellipse imposter
    # basin that near-circular cross-sections create
    c45 = math.cos(math.pi / 4)
    z45 = np.array([[c45, -c45, 0.0], [c45, c45, 0.0], [0.0, 0.0, 1.0]])
    starts = []
    for perm in _AXIS_PERMS:
        for twist in (np.eye(3), z45):
            R0 = R_pca @ perm @ twist
            local = centered @ R0
            extents = np.maximum(np.abs(local).max(axis=0), 0.01)
            for e1 in e_grid:
                for e2 in e_grid:
                    starts.append(_pack(extents, np.array([e1, e2]), R0, centroid))

    explored = []
    for x0 in starts:
        try:
            res = least_squares(_fit_residual, x0, args=(sub,), method="trf",
                                bounds=bounds, max_nfev=70, x_scale="jac")
            explored.append(res)
        except Exception:
            continue
    if not explored:
        raise FitError("all fit starts failed")
    explored.sort(key=lambda r: r.cost)

    best = None
    for cand in explored[:4]:
        res = least_squares(_fit_residual, cand.x, args=(pts,), method="trf",
                            bounds=bounds, max_nfev=400, x_scale="jac")
        if best is None or res.cost < best.cost:
            best = res
    a, e, R, t = _unpack(best.x)
    params = SuperquadricParams(tuple(a), tuple(e), tuple(map(tuple, R)), tuple(t))
    rms = float(np.sqrt(np.mean(_fit_residual(best.x, pts) ** 2)))
    if full_result:
        return FitResult(params, rms)
    return params


_PERM_TO_Z = {0: (1, 2, 0), 1: (2, 0, 1), 2: (0, 1, 2)}


def canonicalize_upright(q: SuperquadricParams, up=(0.0, 0.0, 1.0)) -> SuperquadricParams:
    """Relabel axes so local z points along `up`, when the shape allows it.

    With e1 == e2 a superquadric is invariant under axis permutations, so a
    fit may return the grasp-relevant vertical axis as local x or y; grasp
    webs are computed about local z, so tabletop grasping wants the upright
    labeling.  Shapes with distinct exponents are left untouched (their z is
    intrinsic), as is anything where no relabeling is needed.
    """
    up = normalized(up, "up")
    R = q.rot()
    dots = [abs(float(np.dot(R[:, i], up))) for i in range(3)]
    k = int(np.argmax(dots))
    a = np.asarray(q.a)
    if k != 2:
        if abs(q.e[0] - q.e[1]) >= 0.05:
            return q
        perm = _PERM_TO_Z[k]
        R = R[:, list(perm)]
        a = a[list(perm)]
    if float(np.dot(R[:, 2], up)) < 0:
        R = np.column_stack([-R[:, 0], R[:, 1], -R[:, 2]])  # proper flip, z up
    return SuperquadricParams(tuple(a), q.e, tuple(map(tuple, R)), q.translation)


# ---------------------------------------------------------------------------
# RANSAC plane


@dataclass(frozen=True)
class PlaneFit:
    normal: tuple[float, float, float]
    offset: float  # plane: normal . x = offset
    inliers: tuple[int, ...]


def ransac_plane(cloud, inlier_threshold: float = 0.005, iterations: int = 200,
                 seed: int = 0) -> Optional[PlaneFit]:
    """Best-consensus plane; None when the best inlier ratio is below 20%."""
    pts = np.asarray(cloud, float).reshape(-1, 3)
    if len(pts) < 3:
        raise InvalidInputError(f"need at least 3 points, got {len(pts)}")
    rng = np.random.default_rng(seed)
    best_count, best_normal, best_offset = 0, None, 0.0
    for _ in range(iterations):
        idx = rng.choice(len(pts), 3, replace=False)
        p1, p2, p3 = pts[idx]
        n = np.cross(p2 - p1, p3 - p1)
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            continue
        n = n / norm
        d = float(np.dot(n, p1))
        count = int(np.sum(np.abs(pts @ n - d) <= inlier_threshold))
        if count > best_count:
            best_count, best_normal, best_offset = count, n, d
    if best_normal is None or best_count / len(pts) < 0.20:
        return None
    # refine on the consensus set
    mask = np.abs(pts @ best_normal - best_offset) <= inlier_threshold
    sel = pts[mask]
    c = sel.mean(axis=0)
    _, _, vt = np.linalg.svd(sel - c, full_matrices=False)
    n = vt[2]
    if n[np.argmax(np.abs(n))] < 0:
        n = -n
    d = float(np.dot(n, c))
    mask = np.abs(pts @ n - d) <= inlier_threshold
    return PlaneFit(tuple(n), d, tuple(int(i) for i in np.nonzero(mask)[0]))


# ---------------------------------------------------------------------------
# Contact webs


class ClosureType(Enum):
    PASSIVE_FORM = "passive_form"
    PASSIVE_FORCE = "passive_force"
    ACTIVE_FORCE = "active_force"


@dataclass(frozen=True)
class GripperSpec:
    finger_count: int = 3  # thumb + two fingers
    span: float = 0.25
    fingertip_radius: float = 0.01

    def __post_init__(self):
        if self.finger_count < 2:
            raise InvalidInputError("gripper needs at least 2 fingers")
        if self.span <= 0:
            raise InvalidInputError("gripper span must be > 0")


DEFAULT_GRIPPER = GripperSpec()


@dataclass(frozen=True)
class ContactWeb:
    """Closure-specific contact distribution in the object frame."""

    closure: ClosureType
    contacts: tuple[tuple[tuple[float, float, float], tuple[float, float, float]], ...]
    approach: tuple[float, float, float]


def _omega_for_normal(a1: float, a2: float, e2: float, psi: float) -> float:
    """Parameter omega whose outward cross-section normal points at angle psi."""
    c, s = math.cos(psi), math.sin(psi)
    if abs(c) < 1e-12:
        return math.copysign(math.pi / 2, s)
    if abs(s) < 1e-12:
        return 0.0 if c > 0 else math.pi
    t = (abs(s / c) * a2 / a1) ** (1.0 / (2.0 - e2))
    return math.atan2(math.copysign(t, s), math.copysign(1.0, c))


def _belt_contact(q: SuperquadricParams, eta: float, psi: float):
    """On-surface point + inward unit normal at cross-section normal angle psi."""
    omega = _omega_for_normal(q.a[0], q.a[1], q.e[1], psi)
    p = surface_points(q, np.array([eta]), np.array([omega]))[0]
    n_out = surface_normals(q, np.array([eta]), np.array([omega]))[0]
    return p, -n_out


def _max_equatorial_radius(q: SuperquadricParams) -> float:
    omega = np.linspace(-np.pi, np.pi, 721)
    pts = surface_points(q, np.zeros_like(omega), omega)
    return float(np.max(np.linalg.norm(pts[:, :2], axis=1)))


def compute_contact_web(q: SuperquadricParams, closure: ClosureType,
                        g: GripperSpec = DEFAULT_GRIPPER) -> ContactWeb:
    """Analytic contact placement for one closure objective (object frame).

    Passive force: thumb plus fingers on the equator with inward normals at
    equal angular spacing, so their positive span contains opposing directions.
    Passive form: contacts on two parallel opposing faces, caging without
    applied force.  Active force: fingertips clustered on the upper region,
    leaving reorientation freedom.  The approach is the outward bisector of the
    contact normals (straight down +z when they cancel).
    """
    width = 2.0 * _max_equatorial_radius(q)
    if width > g.span:
        raise InfeasibleGraspError(
            f"object cross-section {width:.3f} m exceeds gripper span {g.span:.3f} m"
        )
    contacts = []
    if closure is ClosureType.PASSIVE_FORCE:
        k = g.finger_count
        for i in range(k):
            psi = math.pi + 2.0 * math.pi * i / k  # thumb faces +x, fingers balance it
            contacts.append(_belt_contact(q, 0.0, psi))
    elif closure is ClosureType.PASSIVE_FORM:
        contacts.append(_belt_contact(q, 0.0, 0.0))  # thumb face, outward +x
        spread = math.radians(12.0)
        offsets = [0.0] if g.finger_count == 2 else [-spread, spread]
        for off in offsets:
            contacts.append(_belt_contact(q, 0.0, math.pi + off))
    elif closure is ClosureType.ACTIVE_FORCE:
        eta0 = math.radians(40.0)
        k = g.finger_count
        for i in range(k):
            psi = math.pi + 2.0 * math.pi * i / k
            contacts.append(_belt_contact(q, eta0, psi))
    else:
        raise InvalidInputError(f"unknown closure {closure}")

    outward_sum = -np.sum([n for _, n in contacts], axis=0)
    if np.linalg.norm(outward_sum) < 1e-6:
        approach = np.array([0.0, 0.0, 1.0])
    else:
        approach = outward_sum / np.linalg.norm(outward_sum)
    return ContactWeb(
        closure,
        tuple((tuple(p), tuple(n)) for p, n in contacts),
        tuple(approach),
    )


def check_force_closure(web: ContactWeb, friction_mu: float, discretization: int = 8) -> bool:
    """True iff the origin lies strictly inside the convex hull of the 6D
    wrenches of the discretized friction cones (torques about the centroid)."""
    if discretization < 4:
        raise InvalidInputError("need at least 4 friction-cone edges per contact")
    wrenches = []
    pts = np.array([p for p, _ in web.contacts])
    rho = max(float(np.max(np.linalg.norm(pts, axis=1))), 1e-6)
    for p, n_in in web.contacts:
        p = np.asarray(p)
        n = normalized(n_in, "contact normal")
        t1, t2 = orthonormal_basis_from(n)
        for k in range(discretization):
            ang = 2.0 * math.pi * k / discretization
            f = n + friction_mu * (math.cos(ang) * t1 + math.sin(ang) * t2)
            f = f / np.linalg.norm(f)
            wrenches.append(np.concatenate([f, np.cross(p, f) / rho]))
    W = np.array(wrenches)
    if np.linalg.matrix_rank(W, tol=1e-9) < 6:
        return False
    try:
        hull = ConvexHull(W)
    except QhullError:
        return False
    return bool(np.max(hull.equations[:, -1]) < -1e-9)


# ---------------------------------------------------------------------------
# Closure selection (affordance rules)

# Purpose dominates object on conflict; unknown pairs fall back to PASSIVE_FORCE.
PURPOSE_AFFORDANCE = {
    "carry": ClosureType.PASSIVE_FORCE,
    "push": ClosureType.PASSIVE_FORCE,
    "power": ClosureType.PASSIVE_FORCE,
    "point": ClosureType.ACTIVE_FORCE,
    "control": ClosureType.ACTIVE_FORCE,
    "write": ClosureType.ACTIVE_FORCE,
    "place": ClosureType.ACTIVE_FORCE,
    "cage": ClosureType.PASSIVE_FORM,
    "hook": ClosureType.PASSIVE_FORM,
}

OBJECT_AFFORDANCE = {
    "cup": ClosureType.PASSIVE_FORCE,
    "glass": ClosureType.PASSIVE_FORCE,
    "pitcher": ClosureType.PASSIVE_FORCE,
    "sponge": ClosureType.PASSIVE_FORCE,
    "box": ClosureType.ACTIVE_FORCE,
    "can": ClosureType.ACTIVE_FORCE,
    "pen": ClosureType.ACTIVE_FORCE,
    "lid": ClosureType.ACTIVE_FORCE,
    # loose hook grips on fixture handles cage without squeezing
    "handle": ClosureType.PASSIVE_FORM,
    "drawer": ClosureType.PASSIVE_FORM,
}


def select_closure(object_tag: Optional[str], purpose_tag: Optional[str] = None) -> ClosureType:
    """Deterministic affordance lookup; purpose wins over object."""
    if purpose_tag:
        hit = PURPOSE_AFFORDANCE.get(purpose_tag.strip().lower())
        if hit is not None:
            return hit
    if object_tag:
        hit = OBJECT_AFFORDANCE.get(object_tag.strip().lower())
        if hit is not None:
            return hit
    return ClosureType.PASSIVE_FORCE


# Grasp-taxonomy aggregation: the image-level grip labels collapse onto the
# three closure objectives (thumb-N fingertip grips all land on active force;
# whole-hand wraps on passive force; caging/hook grips on passive form).
GRASP_TAXONOMY_AGGREGATION = {
    "thumb-2-finger": ClosureType.ACTIVE_FORCE,
    "thumb-3-finger": ClosureType.ACTIVE_FORCE,
    "thumb-4-finger": ClosureType.ACTIVE_FORCE,
    "thumb-index-finger": ClosureType.ACTIVE_FORCE,
    "lateral-pinch": ClosureType.ACTIVE_FORCE,
    "writing-tripod": ClosureType.ACTIVE_FORCE,
    "power-cylindrical": ClosureType.PASSIVE_FORCE,
    "power-spherical": ClosureType.PASSIVE_FORCE,
    "medium-wrap": ClosureType.PASSIVE_FORCE,
    "adducted-thumb": ClosureType.PASSIVE_FORCE,
    "light-tool": ClosureType.PASSIVE_FORCE,
    "hook": ClosureType.PASSIVE_FORM,
    "platform-push": ClosureType.PASSIVE_FORM,
    "cage": ClosureType.PASSIVE_FORM,
    "loose": ClosureType.PASSIVE_FORM,
}


def taxonomy_closure(label: str) -> ClosureType:
    """Aggregate a grasp-taxonomy label onto its closure objective."""
    key = label.strip().lower()
    try:
        return GRASP_TAXONOMY_AGGREGATION[key]
    except KeyError:
        raise InvalidInputError(f"unknown grasp taxonomy label {label!r}")
