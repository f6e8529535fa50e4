"""Estimator-style front end for the bundle renderer.

``BundleRenderer`` follows the scikit-learn parameter conventions
(constructor stores hyperparameters verbatim, ``fit`` builds the per-source
state, ``get_params``/``set_params``/``clone`` work as usual), so render
settings can be grid-searched or serialized with the standard ecosystem
tooling.  ``fit`` prepares the source-view pyramids once; ``predict`` then
renders any number of target cameras against them.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .camera import Camera
from .pyramid import build_mipmap
from .renderer import RenderConfig, RenderReport, render_view


class BundleRenderer(BaseEstimator):
    """Depth-guided bundle sampling renderer with an estimator API.

    Parameters mirror :class:`RenderConfig`; see its docstring for meanings.
    """

    def __init__(self, bundle_size=2, max_samples=6, spacing_fraction=1.0 / 64.0,
                 coarse_weight=1.0, fine_weight=1.0, provider="gaussian",
                 sigma_peak=20.0, direction_weight=1.0, width_floor=None,
                 force_level_zero=False, fixed_samples=None, workers=1):
        self.bundle_size = bundle_size
        self.max_samples = max_samples
        self.spacing_fraction = spacing_fraction
        self.coarse_weight = coarse_weight
        self.fine_weight = fine_weight
        self.provider = provider
        self.sigma_peak = sigma_peak
        self.direction_weight = direction_weight
        self.width_floor = width_floor
        self.force_level_zero = force_level_zero
        self.fixed_samples = fixed_samples
        self.workers = workers

    def _config(self) -> RenderConfig:
        return RenderConfig(**self.get_params())

    def fit(self, views, scene) -> "BundleRenderer":
        """Prepare for rendering: validate the views and build their pyramids.

        Args:
            views: non-empty list of SourceView.
            scene: the synthetic scene supplying exact depth for the sampler
                and the analytic field provider.
        """
        self._config()  # validate parameters up front
        if not views:
            raise ValueError("need at least one source view")
        self.views_ = list(views)
        self.scene_ = scene
        self.mipmaps_ = [build_mipmap(v.image) for v in self.views_]
        return self

    def render(self, target_camera: Camera, target_depth=None) -> RenderReport:
        """Full render report for one target camera."""
        check_is_fitted(self, "views_")
        return render_view(
            self.scene_,
            self.views_,
            target_camera,
            self._config(),
            mipmaps=self.mipmaps_,
            target_depth=target_depth,
        )

    def predict(self, target_camera: Camera) -> np.ndarray:
        """Rendered (H, W, 3) image for one target camera."""
        return self.render(target_camera).image
