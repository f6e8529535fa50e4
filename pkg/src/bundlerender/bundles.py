"""Bundle partitioning, cone construction and adaptive sphere placement.

A bundle is a K x K block of adjacent pixels whose rays are sampled jointly
through one cone.  The cone is sampled with inscribed spheres placed inside a
per-bundle depth range; the number of spheres adapts to the width of that
range so that narrow (smooth) regions receive few samples and wide
(uncertain) regions receive up to the configured maximum.

Depths here are camera-space z values in world units.  Because every ray
direction has camera-space z-component equal to the focal length ``f``, the
ray parameter for depth ``z`` is ``t = z / f`` and all member rays of a
bundle reach depth ``z`` at the same ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import Camera, pixel_footprint
from .errors import GeometryError
from .validation import check_positive, check_positive_int


@dataclass(frozen=True)
class Bundle:
    """A K x K pixel block; edge bundles are clipped to the image.

    ``size`` is the nominal K of the partition, which can exceed the clipped
    ``width``/``height`` on the image border.
    """

    index: tuple  # (bi, bj): column and row of the bundle grid
    u0: int
    v0: int
    width: int
    height: int
    size: int

    @property
    def pixels(self):
        """Member pixel indices in row-major order, shape (n, 2) as (u, v)."""
        v, u = np.mgrid[self.v0 : self.v0 + self.height, self.u0 : self.u0 + self.width]
        return np.stack([u.ravel(), v.ravel()], axis=-1)


@dataclass(frozen=True)
class Cone:
    """Cone through one bundle: apex at the camera center, axis = mean ray.

    ``axis`` is unnormalized (mean of member ray directions), ``disc_radius``
    is the radius of the bundle's disk on the target image plane (K * r_p)
    and ``ray_directions`` holds the member ray directions, row-major.
    """

    apex: np.ndarray
    axis: np.ndarray
    disc_radius: float
    focal: float
    ray_directions: np.ndarray

    @property
    def axis_norm(self) -> float:
        return float(np.linalg.norm(self.axis))


@dataclass(frozen=True)
class Sphere:
    """Inscribed sample sphere with the bundle's ray points at its depth."""

    center: np.ndarray
    radius: float
    ray_points: np.ndarray  # (n, 3), row-major member order
    depth: float  # camera-space z of the center


@dataclass(frozen=True)
class DepthRange:
    """Closed depth interval ``[depth - halfwidth, depth + halfwidth]``.

    ``source`` records where the range came from: "analytic" (ground-truth
    scene query) or "file" (a supplied depth map).
    """

    depth: float
    halfwidth: float
    source: str = "analytic"

    def __post_init__(self):
        if self.halfwidth < 0:
            raise ValueError(f"halfwidth must be >= 0, got {self.halfwidth}")
        if self.depth - self.halfwidth <= 0:
            raise GeometryError(
                f"depth range [{self.depth - self.halfwidth:.6g}, "
                f"{self.depth + self.halfwidth:.6g}] extends behind the camera"
            )

    @property
    def lo(self) -> float:
        return self.depth - self.halfwidth

    @property
    def hi(self) -> float:
        return self.depth + self.halfwidth

    @classmethod
    def from_depths(cls, depths, margin: float, source: str = "analytic"):
        """Range spanning the finite depths of a footprint, padded by ``margin``.

        Returns None when no depth is finite (empty footprint).
        """
        d = np.asarray(depths, dtype=np.float64)
        finite = d[np.isfinite(d)]
        if finite.size == 0:
            return None
        lo = float(finite.min()) - margin
        hi = float(finite.max()) + margin
        return cls(depth=0.5 * (lo + hi), halfwidth=0.5 * (hi - lo), source=source)


@dataclass(frozen=True)
class PlenopticBounds:
    """Quantities entering the light-field maximum camera spacing bound."""

    ray_spacing: float  # spacing between camera rays
    max_texture_frequency: float  # highest texture frequency
    focal: float
    z_min: float
    z_max: float

    def __post_init__(self):
        for name in ("ray_spacing", "max_texture_frequency", "focal", "z_min"):
            check_positive(getattr(self, name), name)
        if not self.z_max > 0:
            raise ValueError(f"z_max must be > 0, got {self.z_max}")
        if self.z_min > self.z_max:
            raise ValueError(f"z_min={self.z_min} exceeds z_max={self.z_max}")

    @property
    def disparity_range(self) -> float:
        """1/z_min - 1/z_max; zero for a flat scene, and then the spacing bound
        is unbounded."""
        if math.isinf(self.z_max):
            return 1.0 / self.z_min
        return 1.0 / self.z_min - 1.0 / self.z_max


def partition_bundles(width: int, height: int, bundle_size: int) -> list:
    """Tile the image into ceil(H/K) x ceil(W/K) non-overlapping bundles.

    Edge bundles are clipped to the image, so blocks always cover every pixel
    exactly once even when K does not divide W or H.
    """
    width = check_positive_int(width, "width")
    height = check_positive_int(height, "height")
    k = check_positive_int(bundle_size, "bundle_size")
    bundles = []
    for bj, v0 in enumerate(range(0, height, k)):
        for bi, u0 in enumerate(range(0, width, k)):
            bundles.append(
                Bundle(
                    index=(bi, bj),
                    u0=u0,
                    v0=v0,
                    width=min(k, width - u0),
                    height=min(k, height - v0),
                    size=k,
                )
            )
    return bundles


def build_cone(camera: Camera, bundle: Bundle) -> Cone:
    """Build the cone of a bundle: mean ray direction and image-plane disk.

    The disk radius is K * r_p regardless of clipping; clipped edge bundles
    average only their present rays.
    """
    pixels = bundle.pixels
    dirs = camera.pixel_directions(pixels[:, 0], pixels[:, 1])
    footprint = pixel_footprint(camera)
    return Cone(
        apex=camera.center,
        axis=dirs.mean(axis=0),
        disc_radius=bundle.size * footprint.radius,
        focal=camera.f,
        ray_directions=dirs,
    )


def adaptive_sample_count(depth_range: DepthRange, min_spacing: float, max_samples: int) -> int:
    """Number of samples for a depth range: ceil(2R / spacing), capped.

    The cap keeps the count within ``[1, max_samples]``; a zero-width range
    gets a single sample at the predicted surface point.
    """
    check_positive(min_spacing, "min_spacing")
    check_positive_int(max_samples, "max_samples")
    if depth_range.halfwidth == 0.0:
        return 1
    count = math.ceil(2.0 * depth_range.halfwidth / min_spacing)
    return max(1, min(count, max_samples))


def inscribed_sphere_radius(center_distance, axis_norm, focal, disc_radius):
    """Radius of the sphere inscribed in a cone at a given distance.

    Vectorized over ``center_distance`` and ``axis_norm``.  The lateral offset
    term ``axis_norm**2 - focal**2`` is clamped at zero: it is exactly zero
    for on-axis cones and only drops below through roundoff.
    """
    center_distance = np.asarray(center_distance, dtype=np.float64)
    axis_norm = np.asarray(axis_norm, dtype=np.float64)
    offset = np.sqrt(np.maximum(axis_norm**2 - focal**2, 0.0))
    slant = np.sqrt((offset - disc_radius) ** 2 + focal**2)
    return center_distance * focal * disc_radius / (axis_norm * slant)


def sample_depths(depth_range: DepthRange, count: int) -> np.ndarray:
    """Centers of ``count`` uniform sub-intervals of the depth range."""
    j = np.arange(count, dtype=np.float64)
    width = depth_range.hi - depth_range.lo
    return depth_range.lo + (j + 0.5) * width / count


def place_spheres(cone: Cone, depth_range: DepthRange, count: int) -> list:
    """Place ``count`` inscribed spheres at the depth-interval centers.

    Spheres are returned sorted by increasing depth.  Each sphere carries the
    member-ray points at its depth; their mean is the sphere center because
    all member directions share the same camera-space z-component.
    """
    count = check_positive_int(count, "count")
    depths = sample_depths(depth_range, count)
    t = depths / cone.focal
    points = cone.apex[None, None, :] + t[:, None, None] * cone.ray_directions[None, :, :]
    centers = cone.apex[None, :] + t[:, None] * cone.axis[None, :]
    distances = t * cone.axis_norm
    radii = inscribed_sphere_radius(distances, cone.axis_norm, cone.focal, cone.disc_radius)
    return [
        Sphere(center=centers[i], radius=float(radii[i]), ray_points=points[i], depth=float(depths[i]))
        for i in range(count)
    ]


def plenoptic_max_spacing(bounds: PlenopticBounds) -> float:
    """Maximum camera spacing allowed by the light-field sampling bound.

    Returns +inf for a flat scene (zero disparity range).
    """
    h_d = bounds.disparity_range
    if h_d == 0.0:
        return math.inf
    return max(2.0 * bounds.ray_spacing, 1.0 / bounds.max_texture_frequency) / (
        bounds.focal * h_d
    )
