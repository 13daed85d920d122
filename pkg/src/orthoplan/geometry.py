"""Minimal 3D math kernel: vectors, unit quaternions, SLERP, principal axes.

Conventions fixed here and relied on everywhere else:

* Euler angles are intrinsic X-then-Y-then-Z, in degrees.
* SLERP takes the shortest path (the second quaternion is negated when the
  dot product is negative) and falls back to normalized linear interpolation
  for geodesic angles below ``SLERP_ANGLE_EPS``.
* Principal axes are eigenvectors of the point covariance in descending
  eigenvalue order, each flipped so its largest-magnitude component is
  positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometryError",
    "Vec3",
    "UnitQuaternion",
    "EulerAnglesDeg",
    "PrincipalAxes",
    "euler_to_quaternion",
    "quaternion_to_euler",
    "quaternion_multiply",
    "rotation_angle_between",
    "slerp",
    "principal_axes",
    "frame_to_quaternion",
]

# Below this geodesic angle (radians) slerp degenerates to nlerp.
SLERP_ANGLE_EPS = 1e-8


class GeometryError(ValueError):
    """Invalid argument to a geometry operation."""


@dataclass(frozen=True)
class Vec3:
    """Point or displacement in anatomical space (mm unless stated)."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise GeometryError(f"non-finite vector component: {(self.x, self.y, self.z)}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class UnitQuaternion:
    """Rotation as a unit quaternion (w, x, y, z); normalized on construction."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        n2 = self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
        if not math.isfinite(n2) or n2 <= 0.0:
            raise GeometryError(f"cannot normalize quaternion {(self.w, self.x, self.y, self.z)}")
        if abs(n2 - 1.0) > 1e-12:
            n = math.sqrt(n2)
            object.__setattr__(self, "w", self.w / n)
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @staticmethod
    def identity() -> "UnitQuaternion":
        return UnitQuaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle_deg: float) -> "UnitQuaternion":
        n = axis.norm()
        if n == 0.0:
            raise GeometryError("zero rotation axis")
        half = math.radians(angle_deg) / 2.0
        s = math.sin(half) / n
        return UnitQuaternion(math.cos(half), axis.x * s, axis.y * s, axis.z * s)

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def dot(self, other: "UnitQuaternion") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def negated(self) -> "UnitQuaternion":
        return UnitQuaternion(-self.w, -self.x, -self.y, -self.z)

    def rotation_angle(self) -> float:
        """Rotation angle in radians, in [0, pi]."""
        return 2.0 * math.acos(min(1.0, abs(self.w)))

    def rotate(self, v: Vec3) -> Vec3:
        """Rotate a vector by this quaternion."""
        # q * (0, v) * q^-1 expanded; avoids building intermediate quaternions.
        tx = 2.0 * (self.y * v.z - self.z * v.y)
        ty = 2.0 * (self.z * v.x - self.x * v.z)
        tz = 2.0 * (self.x * v.y - self.y * v.x)
        return Vec3(
            v.x + self.w * tx + (self.y * tz - self.z * ty),
            v.y + self.w * ty + (self.z * tx - self.x * tz),
            v.z + self.w * tz + (self.x * ty - self.y * tx),
        )

    def as_wxyz(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    def as_matrix(self) -> np.ndarray:
        """3x3 rotation matrix (columns = rotated basis vectors)."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )


@dataclass(frozen=True)
class EulerAnglesDeg:
    """Per-tooth rotation: rx = torque, ry = tip, rz = rotation (degrees)."""

    rx: float
    ry: float
    rz: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rx) and math.isfinite(self.ry) and math.isfinite(self.rz)):
            raise GeometryError(f"non-finite Euler angles: {(self.rx, self.ry, self.rz)}")


def quaternion_multiply(a: UnitQuaternion, b: UnitQuaternion) -> UnitQuaternion:
    """Hamilton product a*b (apply b in a's local frame)."""
    return UnitQuaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def euler_to_quaternion(e: EulerAnglesDeg) -> UnitQuaternion:
    """Unit quaternion for the intrinsic XYZ composition of Euler angles."""
    hx = math.radians(e.rx) / 2.0
    hy = math.radians(e.ry) / 2.0
    hz = math.radians(e.rz) / 2.0
    qx = UnitQuaternion(math.cos(hx), math.sin(hx), 0.0, 0.0)
    qy = UnitQuaternion(math.cos(hy), 0.0, math.sin(hy), 0.0)
    qz = UnitQuaternion(math.cos(hz), 0.0, 0.0, math.sin(hz))
    # Intrinsic rotations compose by right-multiplication.
    return quaternion_multiply(quaternion_multiply(qx, qy), qz)


def quaternion_to_euler(q: UnitQuaternion) -> EulerAnglesDeg:
    """Inverse of :func:`euler_to_quaternion` for ry in (-90, 90) degrees."""
    w, x, y, z = q.w, q.x, q.y, q.z
    # Rotation matrix entries needed for intrinsic-XYZ extraction.
    r02 = 2.0 * (x * z + w * y)
    r12 = 2.0 * (y * z - w * x)
    r22 = 1.0 - 2.0 * (x * x + y * y)
    r01 = 2.0 * (x * y - w * z)
    r00 = 1.0 - 2.0 * (y * y + z * z)
    ry = math.asin(max(-1.0, min(1.0, r02)))
    rx = math.atan2(-r12, r22)
    rz = math.atan2(-r01, r00)
    return EulerAnglesDeg(math.degrees(rx), math.degrees(ry), math.degrees(rz))


def rotation_angle_between(a: UnitQuaternion, b: UnitQuaternion) -> float:
    """Geodesic rotation angle (radians) between two orientations, in [0, pi]."""
    return 2.0 * math.acos(min(1.0, abs(a.dot(b))))


def slerp(a: UnitQuaternion, b: UnitQuaternion, t: float) -> UnitQuaternion:
    """Spherical linear interpolation from a to b along the shortest path.

    t must lie in [0, 1]; the endpoints are returned exactly.
    """
    if not (0.0 <= t <= 1.0):
        raise GeometryError(f"slerp parameter out of range: {t}")
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    dot = a.dot(b)
    if dot < 0.0:
        b = b.negated()
        dot = -dot
    dot = min(1.0, dot)
    theta = math.acos(dot)
    if theta < SLERP_ANGLE_EPS:
        # Vanishing sine: fall back to normalized linear interpolation.
        return UnitQuaternion(
            a.w + t * (b.w - a.w),
            a.x + t * (b.x - a.x),
            a.y + t * (b.y - a.y),
            a.z + t * (b.z - a.z),
        )
    sin_theta = math.sin(theta)
    s0 = math.sin((1.0 - t) * theta) / sin_theta
    s1 = math.sin(t * theta) / sin_theta
    return UnitQuaternion(
        s0 * a.w + s1 * b.w,
        s0 * a.x + s1 * b.x,
        s0 * a.y + s1 * b.y,
        s0 * a.z + s1 * b.z,
    )


@dataclass(frozen=True)
class PrincipalAxes:
    """Centroid, orthonormal axes (descending variance) and per-axis extents.

    Extents are standard deviations along the axes (mm); ``degenerate`` is set
    when the covariance carries no directional information and the axes fall
    back to the identity frame.
    """

    centroid: Vec3
    axes: tuple[Vec3, Vec3, Vec3]
    extents: tuple[float, float, float]
    degenerate: bool


_IDENTITY_AXES = (Vec3(1.0, 0.0, 0.0), Vec3(0.0, 1.0, 0.0), Vec3(0.0, 0.0, 1.0))

# Covariance eigenvalues below this (mm^2) are treated as zero.
_DEGENERATE_VARIANCE = 1e-12


def principal_axes(points) -> PrincipalAxes:
    """PCA frame of a point set.

    Accepts a sequence of Vec3 or an (n, 3) array. Requires at least one
    point; a degenerate covariance yields the flagged identity frame.
    """
    if isinstance(points, np.ndarray):
        pts = np.asarray(points, dtype=float)
    else:
        pts = np.array([p.as_tuple() if isinstance(p, Vec3) else tuple(p) for p in points], dtype=float)
    if pts.size == 0:
        raise GeometryError("principal_axes requires at least one point")
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise GeometryError(f"expected (n, 3) points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("non-finite point coordinates")

    centroid = Vec3.from_array(pts.mean(axis=0))
    n = pts.shape[0]
    if n < 2:
        return PrincipalAxes(centroid, _IDENTITY_AXES, (0.0, 0.0, 0.0), True)

    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]

    if eigvals[0] <= _DEGENERATE_VARIANCE:
        return PrincipalAxes(centroid, _IDENTITY_AXES, (0.0, 0.0, 0.0), True)

    axes = []
    for i in range(3):
        v = eigvecs[:, i]
        if v[int(np.argmax(np.abs(v)))] < 0:
            v = -v
        axes.append(Vec3.from_array(v))
    extents = tuple(float(math.sqrt(ev)) for ev in eigvals)
    return PrincipalAxes(centroid, (axes[0], axes[1], axes[2]), extents, False)


def frame_to_quaternion(axes: tuple[Vec3, Vec3, Vec3]) -> UnitQuaternion:
    """Quaternion for an orthonormal frame given as the local basis in world coordinates.

    The third axis is flipped when the frame is left-handed so the result is a
    proper rotation; the returned quaternion has w >= 0 for determinism.
    """
    a0, a1, a2 = axes
    m = np.array([a0.as_tuple(), a1.as_tuple(), a2.as_tuple()], dtype=float).T
    if np.linalg.det(m) < 0.0:
        m[:, 2] = -m[:, 2]

    # Shepperd's method: pick the largest diagonal combination for stability.
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    q = UnitQuaternion(w, x, y, z)
    if q.w < 0.0:
        q = q.negated()
    return q
