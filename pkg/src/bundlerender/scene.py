"""Synthetic scenes with exact analytic depth.

Scenes are small collections of textured planes and spheres that can be
ray-traced exactly: the depth query is closed-form, so rendered depth maps
and per-pixel ground truth are reliable oracles for the sampling pipeline.
Textures are procedural and band-limited by construction (sinusoids, solid
colors, optional localized high-frequency patches, checkerboards), giving
piecewise-smooth content whose spatial frequency is controllable.

Scene descriptions are versioned JSON; see docs/FORMATS.md for the schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .camera import Camera
from .errors import SceneFormatError

_T_MIN = 1e-9  # hits closer than this along a ray are ignored

SCENE_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# textures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolidTexture:
    color: np.ndarray

    def sample(self, u, v):
        u = np.asarray(u)
        out = np.broadcast_to(self.color, u.shape + (3,))
        return np.array(out)


@dataclass(frozen=True)
class SinusoidTexture:
    """Directional sinusoid: base + amplitude * sin(2 pi f s + phase) where s
    is the local coordinate along ``angle``.  Frequency is cycles per world
    unit on the surface."""

    base: np.ndarray
    amplitude: np.ndarray
    frequency: float
    angle: float = 0.0
    phase: float = 0.0

    def sample(self, u, v):
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        s = u * math.cos(self.angle) + v * math.sin(self.angle)
        wave = np.sin(2.0 * math.pi * self.frequency * s + self.phase)
        return np.clip(self.base + wave[..., None] * self.amplitude, 0.0, 1.0)


@dataclass(frozen=True)
class CheckerTexture:
    color_a: np.ndarray
    color_b: np.ndarray
    cell: float

    def sample(self, u, v):
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        parity = (np.floor(u / self.cell) + np.floor(v / self.cell)) % 2
        return np.where(parity[..., None] > 0.5, self.color_b, self.color_a)


@dataclass(frozen=True)
class PatchTexture:
    """Foreground texture blended over a background inside a soft disk.

    The window is a raised cosine in the local radius, so the high-frequency
    content of the foreground stays localized.
    """

    background: object
    foreground: object
    center: tuple
    radius: float

    def sample(self, u, v):
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        r = np.hypot(u - self.center[0], v - self.center[1]) / self.radius
        window = 0.5 * (1.0 + np.cos(math.pi * np.minimum(r, 1.0)))
        bg = self.background.sample(u, v)
        fg = self.foreground.sample(u, v)
        return bg + window[..., None] * (fg - bg)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanePrimitive:
    """Finite textured rectangle: center, orthonormal in-plane axes and
    half-extents along them."""

    center: np.ndarray
    u_axis: np.ndarray
    v_axis: np.ndarray
    half_extent: tuple
    texture: object

    @property
    def normal(self) -> np.ndarray:
        return np.cross(self.u_axis, self.v_axis)

    def intersect(self, origins, dirs):
        n = self.normal
        denom = dirs @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((self.center - origins) @ n) / denom
        points = origins + t[..., None] * dirs
        rel = points - self.center
        lu = rel @ self.u_axis
        lv = rel @ self.v_axis
        ok = (
            (np.abs(denom) > 1e-15)
            & (t > _T_MIN)
            & (np.abs(lu) <= self.half_extent[0])
            & (np.abs(lv) <= self.half_extent[1])
        )
        return np.where(ok, t, np.inf)

    def local_coords(self, points):
        rel = points - self.center
        return rel @ self.u_axis, rel @ self.v_axis


@dataclass(frozen=True)
class SpherePrimitive:
    """Textured ball; local texture coordinates are arc lengths in azimuth
    and polar angle so frequencies stay in cycles per world unit."""

    center: np.ndarray
    radius: float
    texture: object

    def intersect(self, origins, dirs):
        oc = origins - self.center
        a = np.einsum("...i,...i->...", dirs, dirs)
        b = np.einsum("...i,...i->...", oc, dirs)
        c = np.einsum("...i,...i->...", oc, oc) - self.radius**2
        disc = b * b - a * c
        with np.errstate(invalid="ignore"):
            root = np.sqrt(np.maximum(disc, 0.0))
            near = (-b - root) / a
            far = (-b + root) / a
        t = np.where(near > _T_MIN, near, far)
        ok = (disc > 0.0) & (t > _T_MIN)
        return np.where(ok, t, np.inf)

    def local_coords(self, points):
        rel = (points - self.center) / self.radius
        azimuth = np.arctan2(rel[..., 1], rel[..., 0])
        polar = np.arccos(np.clip(rel[..., 2], -1.0, 1.0))
        return azimuth * self.radius, polar * self.radius


# ---------------------------------------------------------------------------
# scene
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticScene:
    """Primitive list plus the declared depth extent [z_min, z_max]."""

    primitives: tuple
    z_min: float
    z_max: float

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ValueError(f"need z_min < z_max, got [{self.z_min}, {self.z_max}]")
        if self.z_min <= 0:
            raise ValueError(f"z_min must be > 0, got {self.z_min}")

    @property
    def depth_extent(self) -> float:
        return self.z_max - self.z_min

    def trace(self, origins, dirs):
        """Nearest hit along each ray.

        Returns ``(t, index)``: ray parameters (+inf for a miss) and the index
        of the winning primitive (-1 for a miss).  ``t`` is in units of the
        given direction vectors.
        """
        origins = np.asarray(origins, dtype=np.float64)
        dirs = np.asarray(dirs, dtype=np.float64)
        best_t = np.full(dirs.shape[:-1], np.inf)
        best_i = np.full(dirs.shape[:-1], -1, dtype=np.intp)
        for i, prim in enumerate(self.primitives):
            t = prim.intersect(origins, dirs)
            closer = t < best_t
            best_t = np.where(closer, t, best_t)
            best_i = np.where(closer, i, best_i)
        return best_t, best_i

    def shade(self, points, index):
        """Colors of hit points given the winning primitive indices."""
        points = np.asarray(points, dtype=np.float64)
        colors = np.zeros(points.shape[:-1] + (3,))
        for i, prim in enumerate(self.primitives):
            sel = index == i
            if np.any(sel):
                lu, lv = prim.local_coords(points[sel])
                colors[sel] = prim.texture.sample(lu, lv)
        return colors

    def depth_at(self, camera: Camera, px, py):
        """Exact nearest-hit camera-space depth at continuous pixel coords."""
        dirs = camera.plane_directions(px, py)
        t, _ = self.trace(camera.center, dirs)
        return t * camera.f

    def depth_grid(self, camera: Camera) -> np.ndarray:
        """(H, W) exact depth map; +inf where no primitive is hit."""
        dirs = camera.direction_grid()
        t, _ = self.trace(camera.center, dirs)
        return t * camera.f


def render_source_views(scene: SyntheticScene, cameras):
    """Exact ray-traced (image, depth) pairs, one primary ray per pixel.

    Textures are point-sampled at the hit point; missed pixels are black with
    +inf depth.
    """
    out = []
    for cam in cameras:
        dirs = cam.direction_grid()
        t, idx = scene.trace(cam.center, dirs)
        hit = np.isfinite(t)
        points = cam.center + np.where(hit, t, 0.0)[..., None] * dirs
        image = np.zeros(dirs.shape[:-1] + (3,))
        image[hit] = scene.shade(points[hit], idx[hit])
        out.append((np.clip(image, 0.0, 1.0), t * cam.f))
    return out


# ---------------------------------------------------------------------------
# scene descriptions
# ---------------------------------------------------------------------------


def _need(entry: dict, key: str, where: str):
    if key not in entry:
        raise SceneFormatError(f"{where}: missing field '{key}'")
    return entry[key]


def _vec3(value, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise SceneFormatError(f"{where}: expected 3 numbers, got {value!r}")
    arr.setflags(write=False)
    return arr


def _texture_from_spec(spec, where: str, rng: np.random.Generator):
    if not isinstance(spec, dict):
        raise SceneFormatError(f"{where}: texture must be an object, got {type(spec).__name__}")
    kind = _need(spec, "kind", where)
    if kind == "solid":
        return SolidTexture(color=_vec3(_need(spec, "color", where), f"{where}.color"))
    if kind == "sinusoid":
        phase = spec.get("phase", "random")
        if phase == "random":
            phase = float(rng.uniform(0.0, 2.0 * math.pi))
        return SinusoidTexture(
            base=_vec3(_need(spec, "base", where), f"{where}.base"),
            amplitude=_vec3(_need(spec, "amplitude", where), f"{where}.amplitude"),
            frequency=float(_need(spec, "frequency", where)),
            angle=math.radians(float(spec.get("angle_deg", 0.0))),
            phase=float(phase),
        )
    if kind == "checker":
        cell = float(_need(spec, "cell", where))
        if cell <= 0:
            raise SceneFormatError(f"{where}.cell: must be > 0, got {cell}")
        return CheckerTexture(
            color_a=_vec3(_need(spec, "color_a", where), f"{where}.color_a"),
            color_b=_vec3(_need(spec, "color_b", where), f"{where}.color_b"),
            cell=cell,
        )
    if kind == "patch":
        return PatchTexture(
            background=_texture_from_spec(_need(spec, "background", where), f"{where}.background", rng),
            foreground=_texture_from_spec(_need(spec, "foreground", where), f"{where}.foreground", rng),
            center=tuple(np.asarray(_need(spec, "center", where), dtype=np.float64).reshape(2)),
            radius=float(_need(spec, "radius", where)),
        )
    raise SceneFormatError(f"{where}.kind: unknown texture kind {kind!r}")


def _primitive_from_spec(spec, where: str, rng: np.random.Generator):
    if not isinstance(spec, dict):
        raise SceneFormatError(f"{where}: primitive must be an object, got {type(spec).__name__}")
    kind = _need(spec, "kind", where)
    texture = _texture_from_spec(_need(spec, "texture", where), f"{where}.texture", rng)
    if kind == "plane":
        u_axis = _vec3(_need(spec, "u_axis", where), f"{where}.u_axis")
        v_axis = _vec3(_need(spec, "v_axis", where), f"{where}.v_axis")
        if abs(np.linalg.norm(u_axis) - 1.0) > 1e-9 or abs(np.linalg.norm(v_axis) - 1.0) > 1e-9:
            raise SceneFormatError(f"{where}: plane axes must be unit vectors")
        if abs(u_axis @ v_axis) > 1e-9:
            raise SceneFormatError(f"{where}: plane axes must be orthogonal")
        he = np.asarray(_need(spec, "half_extent", where), dtype=np.float64)
        if he.shape != (2,) or np.any(he <= 0):
            raise SceneFormatError(f"{where}.half_extent: expected 2 positive numbers")
        return PlanePrimitive(
            center=_vec3(_need(spec, "center", where), f"{where}.center"),
            u_axis=u_axis,
            v_axis=v_axis,
            half_extent=(float(he[0]), float(he[1])),
            texture=texture,
        )
    if kind == "sphere":
        radius = float(_need(spec, "radius", where))
        if radius <= 0:
            raise SceneFormatError(f"{where}.radius: must be > 0, got {radius}")
        return SpherePrimitive(
            center=_vec3(_need(spec, "center", where), f"{where}.center"),
            radius=radius,
            texture=texture,
        )
    raise SceneFormatError(f"{where}.kind: unknown primitive kind {kind!r}")


def gen_scene(spec) -> SyntheticScene:
    """Build a scene from a description (dict, JSON text path, or preset name).

    Generation is deterministic: randomized texture phases come from the
    description's ``seed``.

    Raises:
        SceneFormatError: on malformed descriptions, naming the failing field
            (or the line for JSON syntax errors).
    """
    if isinstance(spec, str) and spec in PRESETS:
        spec = PRESETS[spec]
    if isinstance(spec, (str, bytes)) or hasattr(spec, "read_text"):
        with open(spec, "r", encoding="utf-8") as fh:
            try:
                spec = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SceneFormatError(f"scene file line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(spec, dict):
        raise SceneFormatError(f"scene description must be an object, got {type(spec).__name__}")
    version = spec.get("version", SCENE_FORMAT_VERSION)
    if version != SCENE_FORMAT_VERSION:
        raise SceneFormatError(f"version: unsupported scene format version {version!r}")
    depth_range = _need(spec, "depth_range", "scene")
    dr = np.asarray(depth_range, dtype=np.float64)
    if dr.shape != (2,) or not dr[0] < dr[1] or dr[0] <= 0:
        raise SceneFormatError(
            f"depth_range: expected [z_min, z_max] with 0 < z_min < z_max, got {depth_range!r}"
        )
    prims_spec = spec.get("primitives", [])
    if not isinstance(prims_spec, list):
        raise SceneFormatError("primitives: must be a list")
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    primitives = tuple(
        _primitive_from_spec(p, f"primitives[{i}]", rng) for i, p in enumerate(prims_spec)
    )
    return SyntheticScene(primitives=primitives, z_min=float(dr[0]), z_max=float(dr[1]))


def _fronto_plane(z, center_x, center_y, he_x, he_y, texture):
    return {
        "kind": "plane",
        "center": [center_x, center_y, z],
        "u_axis": [1.0, 0.0, 0.0],
        "v_axis": [0.0, 1.0, 0.0],
        "half_extent": [he_x, he_y],
        "texture": texture,
    }


# Built-in scene descriptions.  All planes face the default rig (cameras near
# the origin looking along +z); occlusion edges are placed off the bundle
# grid so that edge-crossing bundles exist for every bundle size.
PRESETS = {
    "flat-card": {
        "version": 1,
        "seed": 11,
        "depth_range": [2.5, 3.5],
        "primitives": [
            _fronto_plane(
                3.0, 0.0, 0.0, 2.6, 2.6,
                {
                    "kind": "sinusoid",
                    "base": [0.45, 0.5, 0.55],
                    "amplitude": [0.25, 0.2, 0.18],
                    "frequency": 2.5,
                    "angle_deg": 20.0,
                    "phase": 0.7,
                },
            )
        ],
    },
    "two-planes": {
        "version": 1,
        "seed": 23,
        "depth_range": [2.0, 4.0],
        "primitives": [
            # near-plane edge at x = 0.04: off the bundle grid for K in
            # {1, 2, 4} at 64/128/256 px, so edge-crossing bundles exist
            _fronto_plane(
                2.0, -0.65, 0.0, 0.69, 1.2,
                {
                    "kind": "sinusoid",
                    "base": [0.55, 0.45, 0.4],
                    "amplitude": [0.25, 0.22, 0.2],
                    "frequency": 5.0,
                    "angle_deg": -40.0,
                    "phase": 2.1,
                },
            ),
            _fronto_plane(
                4.0, 0.0, 0.0, 2.8, 2.6,
                {
                    "kind": "sinusoid",
                    "base": [0.42, 0.46, 0.55],
                    "amplitude": [0.22, 0.2, 0.18],
                    "frequency": 1.2,
                    "angle_deg": 25.0,
                    "phase": 4.0,
                },
            ),
        ],
    },
    "textured-planes": {
        "version": 1,
        "seed": 37,
        "depth_range": [2.5, 3.5],
        "primitives": [
            # near-plane edge at x = 0.028 (same off-grid consideration)
            _fronto_plane(
                2.5, 0.728, 0.0, 0.7, 1.05,
                {
                    "kind": "sinusoid",
                    "base": [0.5, 0.42, 0.38],
                    "amplitude": [0.24, 0.2, 0.16],
                    "frequency": 4.0,
                    "angle_deg": 60.0,
                    "phase": 1.3,
                },
            ),
            _fronto_plane(
                3.5, 0.0, 0.0, 2.6, 2.4,
                {
                    "kind": "patch",
                    "background": {
                        "kind": "sinusoid",
                        "base": [0.4, 0.48, 0.52],
                        "amplitude": [0.2, 0.18, 0.16],
                        "frequency": 1.5,
                        "angle_deg": -15.0,
                        "phase": 0.4,
                    },
                    "foreground": {
                        "kind": "sinusoid",
                        "base": [0.5, 0.5, 0.45],
                        "amplitude": [0.3, 0.28, 0.25],
                        "frequency": 12.0,
                        "angle_deg": 10.0,
                        "phase": 5.2,
                    },
                    "center": [-0.5, -0.3],
                    "radius": 0.8,
                },
            ),
        ],
    },
    "empty": {
        "version": 1,
        "seed": 0,
        "depth_range": [1.0, 10.0],
        "primitives": [],
    },
}


def preset_scene(name: str) -> SyntheticScene:
    if name not in PRESETS:
        raise SceneFormatError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return gen_scene(PRESETS[name])
