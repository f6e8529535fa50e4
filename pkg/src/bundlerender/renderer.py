"""Bundle renderer: partition, sample, encode, accumulate, decode, compose.

The pipeline renders a target view from posed source images by grouping the
target rays into K x K bundles, sampling each bundle's cone with inscribed
spheres inside a depth-guided range, featurizing the spheres from source-view
mipmaps, volume-rendering per-bundle features, and decoding a coarse
(area-sampled) and a fine (per-ray) map that compose into the output image.

Everything is deterministic: float64 arithmetic, no randomness, and worker
splitting that falls on bundle boundaries so results are bit-identical for
any worker count.  ``render_oracle`` is the verification baseline: a classic
per-ray sampler written independently of the bundle path.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bundles import inscribed_sphere_radius
from .camera import Camera, pixel_footprint
from .errors import DegenerateGeometryError, GeometryError
from .pyramid import build_mipmap, mip_level, sample_bilinear, sample_trilinear, source_disc_radius_many
from .radiance import FieldQuery, make_provider, softmax_blend
from .validation import check_color_image, check_depth_map, check_positive, check_positive_int

logger = logging.getLogger(__name__)

STAGES = ("partition", "sampling", "pyramid", "encoding", "accumulation", "decoding")


@dataclass(frozen=True)
class SourceView:
    """A posed source image with its depth map."""

    camera: Camera
    image: np.ndarray  # (H, W, 3) in [0, 1]
    depth: np.ndarray  # (H, W), +inf where empty

    def __post_init__(self):
        object.__setattr__(self, "image", check_color_image(self.image, "source image"))
        object.__setattr__(
            self,
            "depth",
            check_depth_map(self.depth, shape=(self.camera.height, self.camera.width), name="source depth"),
        )
        if self.image.shape[:2] != (self.camera.height, self.camera.width):
            raise ValueError(
                f"source image shape {self.image.shape[:2]} does not match camera "
                f"{self.camera.height}x{self.camera.width}"
            )


def make_source_views(scene, cameras) -> list:
    """Ray-trace ``cameras`` against ``scene`` into SourceView inputs."""
    from .scene import render_source_views

    return [
        SourceView(camera=cam, image=img, depth=depth)
        for cam, (img, depth) in zip(cameras, render_source_views(scene, cameras))
    ]


@dataclass(frozen=True)
class RenderConfig:
    """Renderer settings; mirrored by the JSON config file and CLI flags.

    ``spacing_fraction`` sets the minimum inter-sample spacing as a fraction
    of the scene depth extent; ``width_floor`` (default: half that spacing)
    floors the analytic provider's surface width.  ``fixed_samples`` forces a
    uniform per-bundle sample count, bypassing adaptive allocation.
    """

    bundle_size: int = 2
    max_samples: int = 6
    spacing_fraction: float = 1.0 / 64.0
    coarse_weight: float = 1.0
    fine_weight: float = 1.0
    provider: str = "gaussian"
    sigma_peak: float = 20.0
    direction_weight: float = 1.0
    width_floor: float | None = None
    force_level_zero: bool = False
    fixed_samples: int | None = None
    workers: int = 1

    def __post_init__(self):
        check_positive_int(self.bundle_size, "bundle_size")
        check_positive_int(self.max_samples, "max_samples")
        if not (0.0 < self.spacing_fraction <= 1.0):
            raise ValueError(f"spacing_fraction must lie in (0, 1], got {self.spacing_fraction}")
        for name in ("coarse_weight", "fine_weight"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.width_floor is not None:
            check_positive(self.width_floor, "width_floor")
        if self.fixed_samples is not None:
            check_positive_int(self.fixed_samples, "fixed_samples")
        check_positive_int(self.workers, "workers")

    @classmethod
    def from_dict(cls, d: dict) -> "RenderConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}; known: {sorted(known)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass
class RenderReport:
    """Rendered image plus the sampling statistics used for verification."""

    image: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray
    total_samples: int
    avg_samples_per_ray: float
    sample_histogram: np.ndarray  # index n = number of bundles with n samples
    stage_ms: dict
    config: RenderConfig
    opacity: np.ndarray | None = None  # (nby, nbx) accumulated opacity per bundle
    psnr: float | None = None

    def to_json_dict(self) -> dict:
        """Report fields in the documented JSON layout."""
        return {
            "psnr": self.psnr,
            "avg_samples_per_ray": self.avg_samples_per_ray,
            "total_samples": int(self.total_samples),
            "per_stage_ms": {k: float(v) for k, v in self.stage_ms.items()},
            "K": self.config.bundle_size,
            "N_max": self.config.max_samples,
            "nc_histogram": [int(n) for n in self.sample_histogram],
        }


class _Timer:
    def __init__(self):
        self.ms = {name: 0.0 for name in STAGES}
        self._t0 = None
        self._stage = None

    def start(self, stage: str):
        now = time.perf_counter()
        if self._stage is not None:
            self.ms[self._stage] += (now - self._t0) * 1e3
        self._stage = stage
        self._t0 = now

    def stop(self):
        if self._stage is not None:
            self.ms[self._stage] += (time.perf_counter() - self._t0) * 1e3
            self._stage = None


def _blockify(grid: np.ndarray, k: int, nby: int, nbx: int) -> np.ndarray:
    """(nby*k, nbx*k, X) -> (nby*nbx, k*k, X) in row-major member order."""
    x = grid.shape[2:]
    return (
        grid.reshape(nby, k, nbx, k, *x)
        .transpose(0, 2, 1, 3, *range(4, 4 + len(x)))
        .reshape(nby * nbx, k * k, *x)
    )


def _unblockify(flat: np.ndarray, k: int, nby: int, nbx: int) -> np.ndarray:
    """Inverse of :func:`_blockify`."""
    x = flat.shape[2:]
    return (
        flat.reshape(nby, nbx, k, k, *x)
        .transpose(0, 2, 1, 3, *range(4, 4 + len(x)))
        .reshape(nby * k, nbx * k, *x)
    )


def decode_coarse(grid: np.ndarray, bundle_size: int, out_shape=None) -> np.ndarray:
    """Bilinearly upsample the per-bundle coarse features to pixel resolution.

    Grid values sit at bundle centers; pixels outside the outermost centers
    clamp to the border.  ``bundle_size == 1`` is the identity.
    """
    k = check_positive_int(bundle_size, "bundle_size")
    nby, nbx = grid.shape[:2]
    height, width = out_shape if out_shape is not None else (nby * k, nbx * k)
    u = (np.arange(width) + 0.5 - k / 2.0) / k
    v = (np.arange(height) + 0.5 - k / 2.0) / k
    gu = np.clip(u, 0.0, nbx - 1.0)
    gv = np.clip(v, 0.0, nby - 1.0)
    gx, gy = np.meshgrid(gu, gv)
    return sample_bilinear(grid, gx + 0.5, gy + 0.5)


def unfold_fine(grid: np.ndarray, bundle_size: int, out_shape=None) -> np.ndarray:
    """Scatter per-bundle folded ray colors back to their pixels.

    Each grid entry holds K*K*3 values in row-major member order; edge
    bundles place only the rays that fall inside ``out_shape``.
    """
    k = check_positive_int(bundle_size, "bundle_size")
    nby, nbx = grid.shape[:2]
    if grid.shape[2] != k * k * 3:
        raise ValueError(
            f"fine grid holds {grid.shape[2]} values per bundle, expected {k * k * 3}"
        )
    height, width = out_shape if out_shape is not None else (nby * k, nbx * k)
    image = _unblockify(grid.reshape(nby * nbx, k * k, 3), k, nby, nbx)
    return image[:height, :width]


def compose(coarse: np.ndarray, fine: np.ndarray, coarse_weight: float, fine_weight: float,
            clamp: bool = True) -> np.ndarray:
    """Weighted sum of the coarse and fine maps, clamped to [0, 1] at the end.

    ``clamp=False`` returns the raw linear combination (used by linearity
    checks); intermediate maps are never clamped.
    """
    coarse = np.asarray(coarse, dtype=np.float64)
    fine = np.asarray(fine, dtype=np.float64)
    if coarse.shape != fine.shape:
        raise ValueError(f"coarse/fine shapes differ: {coarse.shape} vs {fine.shape}")
    out = coarse_weight * coarse + fine_weight * fine
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


def _bundle_ranges(depth_blocks: np.ndarray, margin: float, far_depth: float):
    """Per-bundle depth ranges [lo, hi] from the footprint ground truth.

    Bundles with no finite depth (empty footprints) get a zero-width range at
    ``far_depth``; their samples see zero density and render as empty space.
    """
    finite = np.isfinite(depth_blocks)
    any_finite = finite.any(axis=1)
    zmin = np.where(finite, depth_blocks, np.inf).min(axis=1)
    zmax = np.where(finite, depth_blocks, -np.inf).max(axis=1)
    lo = np.where(any_finite, zmin - margin, far_depth)
    hi = np.where(any_finite, zmax + margin, far_depth)
    if np.any(lo <= 0.0):
        raise GeometryError("a bundle depth range extends behind the camera")
    return lo, hi


def _sample_counts(lo, hi, min_spacing: float, max_samples: int, fixed: int | None):
    if fixed is not None:
        return np.full(lo.shape, fixed, dtype=np.intp)
    halfwidth = 0.5 * (hi - lo)
    raw = np.ceil(2.0 * halfwidth / min_spacing)
    counts = np.clip(raw, 1, max_samples).astype(np.intp)
    return counts


@dataclass
class _Workspace:
    """Per-render immutable inputs shared by all worker chunks."""

    origin: np.ndarray
    axes: np.ndarray  # (B, 3)
    member_dirs: np.ndarray  # (B, k*k, 3), NaN for absent members
    member_present: np.ndarray  # (B, k*k)
    focal: float
    counts: np.ndarray  # (B,)
    offsets: np.ndarray  # (B,) first sample index per bundle
    depths: np.ndarray  # (S,)
    radii: np.ndarray  # (S,)
    bundle_index: np.ndarray  # (S,)
    views: list
    mipmaps: list
    footprints: list
    provider: object
    force_level_zero: bool
    channels: int


def _process_chunk(ws: _Workspace, b0: int, b1: int):
    """Encode, evaluate and accumulate bundles [b0, b1).

    All arithmetic touches only this chunk's bundles, so outputs are
    bit-identical regardless of how bundles are split across workers.
    Returns the per-bundle features plus the seconds spent encoding and
    accumulating (summed across workers when several run).
    """
    clock = time.perf_counter
    t_start = clock()
    s0 = int(ws.offsets[b0])
    s1 = int(ws.offsets[b1]) if b1 < len(ws.offsets) else len(ws.depths)
    bidx = ws.bundle_index[s0:s1]
    local = bidx - b0
    depths = ws.depths[s0:s1]
    radii = ws.radii[s0:s1]
    n_samples = s1 - s0
    n_views = len(ws.views)
    n_members = ws.member_dirs.shape[1]

    t_param = depths / ws.focal
    centers = ws.origin[None, :] + t_param[:, None] * ws.axes[bidx]
    ray_points = ws.origin[None, None, :] + t_param[:, None, None] * ws.member_dirs[bidx]
    member_ok = ws.member_present[bidx]

    joint = np.zeros((n_samples, n_views, ws.channels))
    rays = np.zeros((n_samples, n_views, n_members * 3))
    visible = np.zeros((n_samples, n_views), dtype=bool)
    delta_norms = np.zeros((n_samples, n_views))

    for i, view in enumerate(ws.views):
        cam = view.camera
        px, py, depth_i = cam.project(centers)
        with np.errstate(invalid="ignore"):
            vis = (
                (depth_i > 0.0)
                & (px >= 0.0)
                & (px <= cam.width)
                & (py >= 0.0)
                & (py <= cam.height)
            )
        visible[:, i] = vis
        sub = np.nonzero(vis)[0]
        if sub.size:
            plane_vecs = cam.plane_directions(px[sub], py[sub])
            plane_norms = np.linalg.norm(plane_vecs, axis=-1)
            center_dist = np.linalg.norm(centers[sub] - cam.center, axis=-1)
            if np.any(center_dist <= radii[sub]):
                raise DegenerateGeometryError(
                    "a source camera center lies inside a sample sphere"
                )
            if ws.force_level_zero:
                levels = np.zeros(sub.size)
            else:
                disc = source_disc_radius_many(center_dist, plane_norms, radii[sub], cam.f)
                levels = mip_level(disc, ws.footprints[i])
            joint[sub, i] = sample_trilinear(ws.mipmaps[i], px[sub], py[sub], levels)
            delta_norms[sub, i] = np.linalg.norm(plane_vecs - ws.axes[bidx[sub]], axis=-1)

        rx, ry, rdepth = cam.project(ray_points)
        with np.errstate(invalid="ignore"):
            ok = (
                member_ok
                & (rdepth > 0.0)
                & (rx >= 0.0)
                & (rx <= cam.width)
                & (ry >= 0.0)
                & (ry <= cam.height)
            )
        colors = np.zeros((n_samples, n_members, 3))
        if np.any(ok):
            colors[ok] = sample_bilinear(view.image, rx[ok], ry[ok])
        rays[:, i] = colors.reshape(n_samples, -1)

    t_encoded = clock()
    query = FieldQuery(
        origin=ws.origin,
        axis_dirs=ws.axes[b0:b1],
        focal=ws.focal,
        bundle_index=local,
        depths=depths,
        radii=radii,
        delta_norms=delta_norms,
        visible=visible,
    )
    sigma, weights = ws.provider.evaluate_batch(query)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
        raise ValueError("field provider returned negative or non-finite densities")

    blended_joint, blended_rays, any_visible = softmax_blend(weights, visible, joint, rays)
    sigma = np.where(any_visible, sigma, 0.0)

    # Within-bundle exclusive sums via a dense (bundles, position) table: the
    # result depends only on each bundle's own samples, keeping worker counts
    # out of the arithmetic.
    counts = ws.counts[b0:b1]
    position = np.arange(n_samples) - np.repeat(ws.offsets[b0:b1] - s0, counts)
    dense = np.zeros((b1 - b0, int(counts.max())))
    dense[local, position] = sigma
    upstream = np.cumsum(dense, axis=1) - dense
    tau = np.exp(-upstream[local, position])
    weights_vr = tau * (1.0 - np.exp(-sigma))

    seg = (ws.offsets[b0:b1] - s0).astype(np.intp)
    coarse = np.add.reduceat(weights_vr[:, None] * blended_joint, seg, axis=0)
    fine = np.add.reduceat(weights_vr[:, None] * blended_rays, seg, axis=0)
    opacity = np.add.reduceat(weights_vr, seg)
    t_done = clock()
    return coarse, fine, opacity, t_encoded - t_start, t_done - t_encoded


def render_view(scene, source_views, target_camera: Camera, config: RenderConfig,
                mipmaps=None, target_depth=None) -> RenderReport:
    """Render the target view with depth-guided bundle sampling.

    Args:
        scene: synthetic scene providing exact depth (used for the per-bundle
            ranges unless ``target_depth`` is given, and by the analytic
            provider).
        source_views: non-empty list of SourceView.
        target_camera: the view to synthesize.
        config: renderer settings.
        mipmaps: optional prebuilt per-view pyramids (skips the build stage).
        target_depth: optional (H, W) target depth map; when given, the
            per-bundle ranges come from it instead of the scene query.

    Returns:
        RenderReport with the composed image, the coarse and fine maps and
        per-stage timings.  Deterministic: identical inputs give bit-identical
        images for any worker count.
    """
    if not source_views:
        raise ValueError("need at least one source view")
    timer = _Timer()

    timer.start("partition")
    k = config.bundle_size
    width, height = target_camera.width, target_camera.height
    nbx = -(-width // k)
    nby = -(-height // k)
    n_bundles = nbx * nby
    dirs = target_camera.direction_grid()
    padded_dirs = np.full((nby * k, nbx * k, 3), np.nan)
    padded_dirs[:height, :width] = dirs
    present = np.zeros((nby * k, nbx * k), dtype=bool)
    present[:height, :width] = True
    member_dirs = _blockify(padded_dirs, k, nby, nbx)
    member_present = _blockify(present, k, nby, nbx)
    member_counts = member_present.sum(axis=1)
    axes = np.nansum(member_dirs, axis=1) / member_counts[:, None]
    axis_norms = np.linalg.norm(axes, axis=-1)
    clamped = int(np.sum(axis_norms**2 < target_camera.f**2))
    if clamped:
        logger.info("clamped the lateral-offset root for %d near-axis cones", clamped)
    footprint = pixel_footprint(target_camera)
    disc_radius = k * footprint.radius

    timer.start("sampling")
    if target_depth is not None:
        depth_map = check_depth_map(target_depth, shape=(height, width), name="target depth")
    else:
        depth_map = scene.depth_grid(target_camera)
    padded_depth = np.full((nby * k, nbx * k), np.inf)
    padded_depth[:height, :width] = depth_map
    depth_blocks = _blockify(padded_depth[:, :, None], k, nby, nbx)[:, :, 0]
    min_spacing = config.spacing_fraction * scene.depth_extent
    margin = 0.5 * min_spacing
    lo, hi = _bundle_ranges(depth_blocks, margin, far_depth=scene.z_max)
    counts = _sample_counts(lo, hi, min_spacing, config.max_samples, config.fixed_samples)
    total_samples = int(counts.sum())
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.intp)
    bundle_index = np.repeat(np.arange(n_bundles, dtype=np.intp), counts)
    position = np.arange(total_samples) - np.repeat(offsets, counts)
    depths = lo[bundle_index] + (position + 0.5) * (hi - lo)[bundle_index] / counts[bundle_index]
    radii = inscribed_sphere_radius(
        (depths / target_camera.f) * axis_norms[bundle_index],
        axis_norms[bundle_index],
        target_camera.f,
        disc_radius,
    )

    timer.start("pyramid")
    if mipmaps is None:
        mipmaps = [build_mipmap(view.image) for view in source_views]
    elif len(mipmaps) != len(source_views):
        raise ValueError("need one mipmap per source view")

    timer.start("encoding")
    width_floor = config.width_floor if config.width_floor is not None else 0.5 * min_spacing
    provider = make_provider(
        config.provider,
        scene,
        sigma_peak=config.sigma_peak,
        direction_weight=config.direction_weight,
        width_floor=width_floor,
    )
    workspace = _Workspace(
        origin=target_camera.center,
        axes=axes,
        member_dirs=member_dirs,
        member_present=member_present,
        focal=target_camera.f,
        counts=counts,
        offsets=offsets,
        depths=depths,
        radii=radii,
        bundle_index=bundle_index,
        views=list(source_views),
        mipmaps=list(mipmaps),
        footprints=[pixel_footprint(v.camera).radius for v in source_views],
        provider=provider,
        force_level_zero=config.force_level_zero,
        channels=mipmaps[0].channels,
    )
    timer.stop()

    bounds = np.linspace(0, n_bundles, config.workers + 1).astype(int)
    chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(chunks) == 1:
        results = [_process_chunk(workspace, *chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(lambda ab: _process_chunk(workspace, *ab), chunks))
    coarse_flat = np.concatenate([r[0] for r in results], axis=0)
    fine_flat = np.concatenate([r[1] for r in results], axis=0)
    opacity = np.concatenate([r[2] for r in results]).reshape(nby, nbx)
    timer.ms["encoding"] += sum(r[3] for r in results) * 1e3
    timer.ms["accumulation"] += sum(r[4] for r in results) * 1e3

    timer.start("decoding")
    coarse_grid = coarse_flat.reshape(nby, nbx, -1)
    fine_grid = fine_flat.reshape(nby, nbx, -1)
    coarse_img = decode_coarse(coarse_grid, k, (height, width))
    fine_img = unfold_fine(fine_grid, k, (height, width))
    image = compose(coarse_img, fine_img, config.coarse_weight, config.fine_weight)
    timer.stop()

    histogram = np.bincount(
        counts, minlength=max(config.max_samples, counts.max() if len(counts) else 0) + 1
    )
    return RenderReport(
        image=image,
        coarse=coarse_img,
        fine=fine_img,
        total_samples=total_samples,
        avg_samples_per_ray=total_samples / (width * height),
        sample_histogram=histogram,
        stage_ms=dict(timer.ms),
        config=config,
        opacity=opacity,
    )


def render_oracle(scene, source_views, target_camera: Camera, num_samples: int, *,
                  spacing_fraction: float = 1.0 / 64.0, sigma_peak: float = 20.0,
                  direction_weight: float = 1.0, width_floor: float | None = None) -> np.ndarray:
    """Classic per-ray reference renderer (the bundle path's oracle).

    Every pixel gets ``num_samples`` uniform interval-center samples inside
    its own ground-truth depth range, colors come from full-resolution
    bilinear lookups, and blending/accumulation follow the same analytic
    field evaluated per pixel.  No bundling, no pyramid, no decode stage.
    """
    if not source_views:
        raise ValueError("need at least one source view")
    num_samples = check_positive_int(num_samples, "num_samples")
    width, height = target_camera.width, target_camera.height
    n_pix = width * height
    origin = target_camera.center
    focal = target_camera.f

    dirs = target_camera.direction_grid().reshape(n_pix, 3)
    dir_norms = np.linalg.norm(dirs, axis=-1)
    z_true = scene.depth_grid(target_camera).reshape(n_pix)

    min_spacing = spacing_fraction * scene.depth_extent
    margin = 0.5 * min_spacing
    floor = width_floor if width_floor is not None else 0.5 * min_spacing
    finite = np.isfinite(z_true)
    lo = np.where(finite, z_true - margin, scene.z_max)
    hi = np.where(finite, z_true + margin, scene.z_max)
    if np.any(lo <= 0.0):
        raise GeometryError("a pixel depth range extends behind the camera")

    j = np.arange(num_samples)
    z = lo[:, None] + (j[None, :] + 0.5) * (hi - lo)[:, None] / num_samples  # (P, N)
    t_param = z / focal
    points = origin[None, None, :] + t_param[:, :, None] * dirs[:, None, :]

    # inscribed sphere radius of each pixel's own (K=1) cone
    pixel_radius = pixel_footprint(target_camera).radius
    lateral = np.sqrt(np.maximum(dir_norms**2 - focal**2, 0.0))
    slant = np.sqrt((lateral - pixel_radius) ** 2 + focal**2)
    radii = (t_param * dir_norms[:, None]) * focal * pixel_radius / (dir_norms[:, None] * slant[:, None])

    widths = np.maximum(radii, floor)
    offset = z - z_true[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        sigma = sigma_peak * np.exp(-(offset**2) / (2.0 * widths**2))
    sigma = np.where(np.isfinite(sigma), sigma, 0.0)

    n_views = len(source_views)
    colors = np.zeros((n_pix, num_samples, n_views, 3))
    weights = np.full((n_pix, num_samples, n_views), -np.inf)
    visible = np.zeros((n_pix, num_samples, n_views), dtype=bool)
    for i, view in enumerate(source_views):
        cam = view.camera
        px, py, depth_i = cam.project(points)
        with np.errstate(invalid="ignore"):
            vis = (
                (depth_i > 0.0)
                & (px >= 0.0)
                & (px <= cam.width)
                & (py >= 0.0)
                & (py <= cam.height)
            )
        visible[:, :, i] = vis
        sub = np.nonzero(vis)
        if sub[0].size:
            plane_vecs = cam.plane_directions(px[sub], py[sub])
            delta = np.linalg.norm(plane_vecs - dirs[sub[0]], axis=-1)
            weights[:, :, i][sub] = -direction_weight * delta
            colors[:, :, i][sub] = sample_bilinear(view.image, px[sub], py[sub])

    peak = np.max(weights, axis=2, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    expw = np.where(visible, np.exp(weights - peak), 0.0)
    denom = expw.sum(axis=2, keepdims=True)
    denom = np.where(denom > 0.0, denom, 1.0)
    probs = expw / denom
    blended = np.einsum("pnv,pnvc->pnc", probs, colors)
    sigma = np.where(visible.any(axis=2), sigma, 0.0)

    upstream = np.cumsum(sigma, axis=1) - sigma
    tau = np.exp(-upstream)
    vr_weights = tau * (1.0 - np.exp(-sigma))
    out = np.einsum("pn,pnc->pc", vr_weights, blended)
    return np.clip(out.reshape(height, width, 3), 0.0, 1.0)
