"""Pinhole camera model, ray casting and projection.

Conventions used throughout the package:

- Right-handed world frame.  Camera space has +x right, +y down, +z forward;
  the camera looks along its +z axis.
- Extrinsics are world-to-camera: ``x_cam = R @ x_world + t``.
- Pixel ``(u, v)`` covers ``[u, u+1) x [v, v+1)`` and its center is
  ``(u + 0.5, v + 0.5)`` in continuous pixel coordinates.
- The focal length ``f`` and the pixel pitches ``dx, dy`` are distances in
  world units at the image plane.  Ray directions are kept *unnormalized* as
  image-plane point minus projection center, so every ray direction has
  camera-space z-component exactly ``f`` and the norm of a direction is the
  distance from the center to the pierced image-plane point.  Cone and sphere
  radii then live in the same world units as the scene.

A camera given with a focal length in pixels converts to this convention as
``f_world = f_pixels * pixel_pitch`` (square pixels assumed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, SceneFormatError

_ROTATION_TOL = 1e-9

# Exact JSON field names of the rig format (documented in docs/FORMATS.md).
_RIG_FIELDS = ("f", "cx", "cy", "dx", "dy", "R", "t", "W", "H")


@dataclass(frozen=True)
class Camera:
    """Pinhole camera with world-to-camera pose.

    Attributes:
        f: focal length, world units at the image plane (> 0).
        cx, cy: principal point in pixels.
        dx, dy: pixel pitch in world units at the image plane (> 0).
        rotation: 3x3 world-to-camera rotation (orthonormal).
        translation: world-to-camera translation, ``x_cam = R x_world + t``.
        width, height: image size in pixels (>= 1).
    """

    f: float
    cx: float
    cy: float
    dx: float
    dy: float
    rotation: np.ndarray
    translation: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "f", float(self.f))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "dy", float(self.dy))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        rot = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        trans = np.array(self.translation, dtype=np.float64).reshape(3)
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

        if self.f <= 0:
            raise ValueError(f"focal length must be > 0, got {self.f}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError(f"pixel pitch must be > 0, got dx={self.dx}, dy={self.dy}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image size must be >= 1, got {self.width}x{self.height}")
        err = np.abs(rot.T @ rot - np.eye(3)).max()
        if err > _ROTATION_TOL:
            raise ValueError(
                f"rotation is not orthonormal (max |R^T R - I| = {err:.3e} > {_ROTATION_TOL})"
            )

    @property
    def center(self) -> np.ndarray:
        """Projection center in world coordinates."""
        return -self.rotation.T @ self.translation

    def pixel_directions(self, u, v) -> np.ndarray:
        """World-space ray directions through the centers of pixels ``(u, v)``.

        ``u`` and ``v`` are integer pixel indices (any matching shape).
        Directions are unnormalized (image-plane point minus center).
        """
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        cam = np.stack(
            [
                (u + 0.5 - self.cx) * self.dx,
                (v + 0.5 - self.cy) * self.dy,
                np.broadcast_to(np.float64(self.f), u.shape),
            ],
            axis=-1,
        )
        return cam @ self.rotation  # rows are R^T @ cam

    def direction_grid(self) -> np.ndarray:
        """(H, W, 3) world directions through every pixel center."""
        v, u = np.mgrid[0 : self.height, 0 : self.width]
        return self.pixel_directions(u, v)

    def project(self, points: np.ndarray):
        """Project world points to continuous pixel coordinates.

        Args:
            points: (..., 3) world points.

        Returns:
            ``(px, py, depth)`` arrays; ``depth`` is the camera-space z and may
            be non-positive (callers decide how to treat behind-camera points).
        """
        pts = np.asarray(points, dtype=np.float64)
        cam = pts @ self.rotation.T + self.translation
        depth = cam[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            px = cam[..., 0] * self.f / (depth * self.dx) + self.cx
            py = cam[..., 1] * self.f / (depth * self.dy) + self.cy
        return px, py, depth

    def plane_directions(self, px, py) -> np.ndarray:
        """World vectors from the center to image-plane points ``(px, py)``.

        ``(px, py)`` are continuous pixel coordinates; the result is the
        unnormalized view direction of whatever projects there.
        """
        px = np.asarray(px, dtype=np.float64)
        py = np.asarray(py, dtype=np.float64)
        cam = np.stack(
            [
                (px - self.cx) * self.dx,
                (py - self.cy) * self.dy,
                np.broadcast_to(np.float64(self.f), px.shape),
            ],
            axis=-1,
        )
        return cam @ self.rotation


@dataclass(frozen=True)
class Ray:
    """A ray through a pixel center: point at parameter ``t`` is ``o + t d``."""

    origin: np.ndarray
    direction: np.ndarray
    pixel: tuple

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class PixelFootprint:
    """Area-equivalent disk of one pixel: ``pi * radius**2 == dx * dy``."""

    dx: float
    dy: float
    radius: float


def cast_ray(camera: Camera, pixel) -> Ray:
    """Cast the ray from the projection center through a pixel center.

    Raises:
        ValueError: if the pixel index lies outside the image.
    """
    u, v = int(pixel[0]), int(pixel[1])
    if not (0 <= u < camera.width and 0 <= v < camera.height):
        raise ValueError(
            f"pixel ({u}, {v}) outside image {camera.width}x{camera.height}"
        )
    direction = camera.pixel_directions(np.float64(u), np.float64(v))
    return Ray(origin=camera.center, direction=np.asarray(direction), pixel=(u, v))


def project_point(camera: Camera, point):
    """Project a world point; returns ``((px, py), depth)``.

    Raises:
        BehindCameraError: if the point has camera-space depth <= 0.
    """
    px, py, depth = camera.project(np.asarray(point, dtype=np.float64))
    if depth <= 0:
        raise BehindCameraError(f"point has non-positive depth {depth:.6g}")
    return (float(px), float(py)), float(depth)


def pixel_footprint(camera: Camera) -> PixelFootprint:
    """Radius of the disk with the same area as one pixel."""
    radius = float(np.sqrt(camera.dx * camera.dy / np.pi))
    return PixelFootprint(dx=camera.dx, dy=camera.dy, radius=radius)


def view_direction_delta(sphere_center, cone_direction, source_camera: Camera):
    """Difference between a source view's direction to a point and a cone axis.

    The source-view direction is the vector from the source projection center
    to the point where ``sphere_center`` projects on the source image plane
    (same unnormalized convention as ray directions).  Returns the norm of the
    difference and its unit direction; the direction is the zero vector when
    the norm is below 1e-12.

    Raises:
        BehindCameraError: if the point is behind the source camera.
    """
    center = np.asarray(sphere_center, dtype=np.float64)
    axis = np.asarray(cone_direction, dtype=np.float64)
    px, py, depth = source_camera.project(center)
    if depth <= 0:
        raise BehindCameraError(f"sphere center has non-positive depth {depth:.6g}")
    source_dir = source_camera.plane_directions(np.float64(px), np.float64(py))
    delta = np.asarray(source_dir) - axis
    norm = float(np.linalg.norm(delta))
    if norm < 1e-12:
        return norm, np.zeros(3)
    return norm, delta / norm


def camera_to_dict(camera: Camera) -> dict:
    return {
        "f": camera.f,
        "cx": camera.cx,
        "cy": camera.cy,
        "dx": camera.dx,
        "dy": camera.dy,
        "R": [float(x) for x in camera.rotation.reshape(-1)],
        "t": [float(x) for x in camera.translation],
        "W": camera.width,
        "H": camera.height,
    }


def camera_from_dict(d: dict) -> Camera:
    missing = [k for k in _RIG_FIELDS if k not in d]
    if missing:
        raise SceneFormatError(f"camera entry missing fields: {missing}")
    rot = np.asarray(d["R"], dtype=np.float64)
    if rot.size != 9:
        raise SceneFormatError(f"camera field 'R' must hold 9 floats, got {rot.size}")
    t = np.asarray(d["t"], dtype=np.float64)
    if t.size != 3:
        raise SceneFormatError(f"camera field 't' must hold 3 floats, got {t.size}")
    try:
        return Camera(
            f=d["f"], cx=d["cx"], cy=d["cy"], dx=d["dx"], dy=d["dy"],
            rotation=rot.reshape(3, 3), translation=t,
            width=d["W"], height=d["H"],
        )
    except ValueError as exc:
        raise SceneFormatError(f"invalid camera entry: {exc}") from exc


def load_rig(path) -> list[Camera]:
    """Load a camera rig from a JSON file: ``{"cameras": [{f, cx, cy, ...}]}``."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneFormatError(f"rig file {path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or "cameras" not in data:
        raise SceneFormatError(f"rig file {path}: missing top-level 'cameras' list")
    cams = data["cameras"]
    if not isinstance(cams, list) or not cams:
        raise SceneFormatError(f"rig file {path}: 'cameras' must be a non-empty list")
    return [camera_from_dict(c) for c in cams]


def save_rig(path, cameras) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"cameras": [camera_to_dict(c) for c in cameras]}, fh, indent=2)
        fh.write("\n")
