"""Depth-guided bundle sampling for multi-view image-based rendering."""

from .bundles import (
    Bundle,
    Cone,
    DepthRange,
    PlenopticBounds,
    Sphere,
    adaptive_sample_count,
    build_cone,
    partition_bundles,
    place_spheres,
    plenoptic_max_spacing,
)
from .camera import (
    Camera,
    PixelFootprint,
    Ray,
    cast_ray,
    load_rig,
    pixel_footprint,
    project_point,
    save_rig,
    view_direction_delta,
)
from .errors import (
    BehindCameraError,
    DegenerateGeometryError,
    GeometryError,
    SceneFormatError,
)
from .estimator import BundleRenderer
from .metrics import Metrics, compare, psnr, ssim
from .pyramid import (
    Mipmap,
    SphereEncoding,
    build_mipmap,
    encode_rays,
    encode_sphere,
    mip_level,
    sample_bilinear,
    sample_trilinear,
    source_disc_radius,
)
from .radiance import (
    BundleFeatures,
    ConstantField,
    FieldProvider,
    FieldQuery,
    GaussianSurfaceField,
    RadianceSample,
    accumulate,
    blend_features,
    make_provider,
    transmittance,
)
from .renderer import (
    RenderConfig,
    RenderReport,
    SourceView,
    compose,
    decode_coarse,
    make_source_views,
    render_oracle,
    render_view,
    unfold_fine,
)
from .bench import load_benchmark_config, run_benchmark
from .rigs import make_camera, make_default_rig
from .scene import PRESETS, SyntheticScene, gen_scene, preset_scene, render_source_views

__version__ = "0.1.0"
