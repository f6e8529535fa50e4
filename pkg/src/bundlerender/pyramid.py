"""Per-view image pyramids and sphere encoding.

Each source view is pre-filtered into a mipmap; a sample sphere is projected
into the view to get a disc, and the disc radius picks a fractional pyramid
level so that one trilinear lookup integrates the image over roughly the
area the sphere covers.  Full-resolution per-ray colors complement that
area-averaged value with high-frequency detail.

Lookup coordinates are always continuous pixel coordinates of the base level
(pixel ``(i, j)`` has center ``(i + 0.5, j + 0.5)``); coarser levels scale
coordinates by ``2**-level`` internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import Camera
from .errors import BehindCameraError, DegenerateGeometryError
from .validation import check_positive


@dataclass(frozen=True)
class Mipmap:
    """Image pyramid: level 0 is the input, each level halves both dimensions
    (rounding up) with a 2x2 box filter."""

    levels: tuple

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    @property
    def channels(self) -> int:
        return self.levels[0].shape[2]


@dataclass(frozen=True)
class SphereEncoding:
    """Per-view features of one sample sphere.

    ``joint`` is the area-matched pyramid lookup per view (V, C); ``rays``
    holds the concatenated per-ray colors per view (V, n_rays * 3), row-major
    member order; ``visible`` flags views where the sphere center projects in
    front of the camera and inside the image.  Invisible views carry zeros.
    """

    joint: np.ndarray
    visible: np.ndarray
    rays: np.ndarray | None = None


def _box_downsample(level: np.ndarray) -> np.ndarray:
    """2x2 box filter; edge texels average over the in-bounds subset."""
    h, w, _ = level.shape
    padded = np.pad(level, ((0, h % 2), (0, w % 2), (0, 0)))
    weights = np.pad(np.ones((h, w)), ((0, h % 2), (0, w % 2)))
    total = (
        padded[0::2, 0::2]
        + padded[1::2, 0::2]
        + padded[0::2, 1::2]
        + padded[1::2, 1::2]
    )
    count = (
        weights[0::2, 0::2]
        + weights[1::2, 0::2]
        + weights[0::2, 1::2]
        + weights[1::2, 1::2]
    )
    return total / count[:, :, None]


def build_mipmap(image: np.ndarray) -> Mipmap:
    """Build the pyramid of an (H, W, C) image.

    The number of levels is ``floor(log2(max(W, H))) + 1``; level 0 is the
    input unchanged.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must be a non-empty (H, W, C) grid, got shape {img.shape}")
    top = int(np.floor(np.log2(max(img.shape[0], img.shape[1]))))
    levels = [img]
    for _ in range(top):
        levels.append(_box_downsample(levels[-1]))
    for lv in levels:
        lv.setflags(write=False)
    return Mipmap(levels=tuple(levels))


def sample_bilinear(grid: np.ndarray, x, y) -> np.ndarray:
    """Bilinear lookup on an (h, w, C) grid at base-level pixel coordinates.

    Coordinates outside the grid clamp to the border texel, so the lookup is
    total and continuous.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    h, w, _ = grid.shape
    fx = np.clip(x - 0.5, 0.0, w - 1.0)
    fy = np.clip(y - 0.5, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(np.intp)
    y0 = np.floor(fy).astype(np.intp)
    x0 = np.minimum(x0, w - 1)
    y0 = np.minimum(y0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    ax = (fx - x0)[..., None]
    ay = (fy - y0)[..., None]
    top = grid[y0, x0] * (1.0 - ax) + grid[y0, x1] * ax
    bot = grid[y1, x0] * (1.0 - ax) + grid[y1, x1] * ax
    return top * (1.0 - ay) + bot * ay


def _bilinear_at_level(mipmap: Mipmap, x, y, level: int) -> np.ndarray:
    scale = 2.0**-level
    return sample_bilinear(mipmap.levels[level], np.asarray(x) * scale, np.asarray(y) * scale)


def sample_trilinear(mipmap: Mipmap, x, y, level) -> np.ndarray:
    """Trilinear lookup: bilinear inside the two bracketing levels, linear
    across them.  ``level`` may be fractional and is clamped to the pyramid.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    lv = np.atleast_1d(np.asarray(level, dtype=np.float64))
    x, y, lv = np.broadcast_arrays(x, y, lv)
    scalar = np.ndim(level) == 0 and np.ndim(x) <= 1 and x.size == 1

    lv = np.clip(lv, 0.0, float(mipmap.max_level))
    base = np.floor(lv).astype(int)
    frac = lv - base
    out = np.empty(x.shape + (mipmap.channels,), dtype=np.float64)
    for lev in np.unique(base):
        sel = base == lev
        lo = _bilinear_at_level(mipmap, x[sel], y[sel], int(lev))
        f = frac[sel][..., None]
        if np.any(f > 0.0):
            hi = _bilinear_at_level(mipmap, x[sel], y[sel], min(int(lev) + 1, mipmap.max_level))
            out[sel] = lo * (1.0 - f) + hi * f
        else:
            out[sel] = lo
    if scalar:
        return out[0]
    return out


def source_disc_radius_many(center_distance, plane_distance, sphere_radius, focal):
    """Vectorized radius of a sphere's projected disc on a source image plane.

    ``center_distance`` is the distance from the source projection center to
    the sphere center, ``plane_distance`` the distance from that center to the
    sphere's projection on the image plane.  The lateral term
    ``plane_distance**2 - focal**2`` is clamped at zero (exact on-axis value).
    """
    center_distance = np.asarray(center_distance, dtype=np.float64)
    plane_distance = np.asarray(plane_distance, dtype=np.float64)
    sphere_radius = np.asarray(sphere_radius, dtype=np.float64)
    ratio = center_distance / sphere_radius
    lateral = np.sqrt(np.maximum(plane_distance**2 - focal**2, 0.0))
    return plane_distance**2 / (focal * np.sqrt(ratio**2 - 1.0) + lateral)


def source_disc_radius(sphere, source_camera: Camera) -> float:
    """Disc radius of one sphere in one source view.

    Raises:
        BehindCameraError: sphere center behind the source camera.
        DegenerateGeometryError: source camera center inside the sphere.
    """
    px, py, depth = source_camera.project(sphere.center)
    if depth <= 0:
        raise BehindCameraError(f"sphere center has non-positive depth {depth:.6g}")
    distance = float(np.linalg.norm(sphere.center - source_camera.center))
    if distance <= sphere.radius:
        raise DegenerateGeometryError(
            f"source camera lies inside the sample sphere "
            f"(distance {distance:.6g} <= radius {sphere.radius:.6g})"
        )
    plane_vec = source_camera.plane_directions(np.float64(px), np.float64(py))
    plane_distance = float(np.linalg.norm(plane_vec))
    return float(
        source_disc_radius_many(distance, plane_distance, sphere.radius, source_camera.f)
    )


def mip_level(disc_radius: float, footprint_radius: float):
    """Fractional pyramid level matching a projected disc to texel size.

    ``log2(disc_radius / footprint_radius)``; negative values (discs smaller
    than a pixel) are meaningful and clamp to level 0 at lookup time.
    """
    disc_radius = np.asarray(disc_radius, dtype=np.float64)
    if np.any(disc_radius <= 0):
        raise ValueError("disc_radius must be > 0")
    check_positive(footprint_radius, "footprint_radius")
    out = np.log2(disc_radius / footprint_radius)
    if out.ndim == 0:
        return float(out)
    return out


def encode_sphere(
    sphere,
    mipmaps,
    cameras,
    footprint_radius: float,
    level_override: float | None = None,
) -> SphereEncoding:
    """Joint (area-matched) features of one sphere across all source views.

    Views where the center is behind the camera or projects outside the image
    get ``visible=False`` and zero features.  ``footprint_radius`` is the
    source-view pixel-disk radius used for level selection.

    Raises:
        ValueError: with zero source views.
    """
    if len(mipmaps) == 0 or len(mipmaps) != len(cameras):
        raise ValueError("need at least one source view, with one mipmap per camera")
    channels = mipmaps[0].channels
    joint = np.zeros((len(cameras), channels))
    visible = np.zeros(len(cameras), dtype=bool)
    for i, (mm, cam) in enumerate(zip(mipmaps, cameras)):
        px, py, depth = cam.project(sphere.center)
        if depth <= 0 or not (0.0 <= px <= cam.width and 0.0 <= py <= cam.height):
            continue
        visible[i] = True
        if level_override is None:
            radius = source_disc_radius(sphere, cam)
            level = mip_level(radius, footprint_radius)
        else:
            level = level_override
        joint[i] = sample_trilinear(mm, float(px), float(py), level)
    return SphereEncoding(joint=joint, visible=visible)


def encode_rays(sphere, images, cameras) -> np.ndarray:
    """Per-ray colors of one sphere across all source views.

    Each of the sphere's ray points is projected into every view and sampled
    bilinearly at full resolution; behind-camera or out-of-image projections
    contribute zero color.  Returns (V, n_rays * 3), row-major member order.
    """
    points = sphere.ray_points
    out = np.zeros((len(cameras), points.shape[0] * 3))
    for i, (img, cam) in enumerate(zip(images, cameras)):
        px, py, depth = cam.project(points)
        ok = (depth > 0) & (px >= 0) & (px <= cam.width) & (py >= 0) & (py <= cam.height)
        colors = np.zeros((points.shape[0], 3))
        if np.any(ok):
            colors[ok] = sample_bilinear(img, px[ok], py[ok])
        out[i] = colors.reshape(-1)
    return out
