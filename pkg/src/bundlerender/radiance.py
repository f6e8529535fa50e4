"""Field evaluation, view blending and cone-wise volume rendering.

The field provider is the pluggable stand-in for a learned radiance network:
given sample spheres it returns a density and one blending weight per source
view.  The default provider peaks a Gaussian density at the exact surface
depth along each cone axis and weights views by direction agreement.  Softmax
blending then mixes per-view features, and the samples of each cone are
accumulated front to back with unit-free opacities ``1 - exp(-sigma)``.

Note the transmittance deliberately carries no inter-sample spacing factor,
so results depend on the number of samples even for identical geometry; the
sample counts are part of the method, not an integration step size.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .bundles import Cone, Sphere
from .pyramid import SphereEncoding


@dataclass(frozen=True)
class FieldQuery:
    """Batched provider input: all sample spheres of one render.

    ``axis_dirs`` holds one unnormalized cone axis per bundle; ``bundle_index``
    maps each sample to its bundle.  ``depths`` are camera-space z values and
    ``focal`` converts between depth and ray parameter (``t = z / focal``).
    """

    origin: np.ndarray  # (3,)
    axis_dirs: np.ndarray  # (B, 3)
    focal: float
    bundle_index: np.ndarray  # (S,)
    depths: np.ndarray  # (S,)
    radii: np.ndarray  # (S,)
    delta_norms: np.ndarray  # (S, V)
    visible: np.ndarray  # (S, V) bool


class FieldProvider(ABC):
    """Density and per-view blending weights for sample spheres.

    Implementations must be pure and reentrant: no mutable state may be
    touched during evaluation, so any number of bundles can be evaluated
    concurrently.  Invisible views must receive ``-inf`` weights (the blender
    additionally masks them).
    """

    @abstractmethod
    def evaluate_batch(self, query: FieldQuery):
        """Return ``(sigma, weights)`` with shapes (S,) and (S, V)."""

    def evaluate(self, sphere: Sphere, cone: Cone, encoding: SphereEncoding, delta_norms):
        """Single-sphere convenience wrapper around :meth:`evaluate_batch`."""
        query = FieldQuery(
            origin=np.asarray(cone.apex, dtype=np.float64),
            axis_dirs=np.asarray(cone.axis, dtype=np.float64)[None, :],
            focal=cone.focal,
            bundle_index=np.zeros(1, dtype=np.intp),
            depths=np.array([sphere.depth]),
            radii=np.array([sphere.radius]),
            delta_norms=np.asarray(delta_norms, dtype=np.float64)[None, :],
            visible=np.asarray(encoding.visible, dtype=bool)[None, :],
        )
        sigma, weights = self.evaluate_batch(query)
        return float(sigma[0]), weights[0]


class GaussianSurfaceField(FieldProvider):
    """Analytic density peaked at the true surface depth along each cone axis.

    ``sigma = sigma_peak * exp(-(z - z_surface)**2 / (2 s**2))`` with
    ``s = max(sphere_radius, width_floor)``: coarser bundles get softer
    surfaces.  View weights are ``-direction_weight * |d_view - d_axis|`` so
    that closer viewing directions dominate after the softmax.
    """

    def __init__(self, scene, sigma_peak: float = 20.0, direction_weight: float = 1.0,
                 width_floor: float = 1e-6):
        if sigma_peak < 0:
            raise ValueError(f"sigma_peak must be >= 0, got {sigma_peak}")
        if width_floor <= 0:
            raise ValueError(f"width_floor must be > 0, got {width_floor}")
        self.scene = scene
        self.sigma_peak = float(sigma_peak)
        self.direction_weight = float(direction_weight)
        self.width_floor = float(width_floor)

    def evaluate_batch(self, query: FieldQuery):
        hit_t, _ = self.scene.trace(query.origin[None, :], query.axis_dirs)
        surface_z = hit_t * query.focal  # +inf where the axis misses geometry
        widths = np.maximum(query.radii, self.width_floor)
        offset = query.depths - surface_z[query.bundle_index]
        # (inf)**2 / width overflows cleanly to inf -> exp(-inf) == 0
        with np.errstate(over="ignore", invalid="ignore"):
            sigma = self.sigma_peak * np.exp(-(offset**2) / (2.0 * widths**2))
        sigma = np.where(np.isfinite(sigma), sigma, 0.0)
        weights = -self.direction_weight * query.delta_norms
        weights = np.where(query.visible, weights, -np.inf)
        return sigma, weights


class ConstantField(FieldProvider):
    """Fixed density and uniform weights; useful as a pipeline probe."""

    def __init__(self, scene=None, sigma: float = 1.0, **_ignored):
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        self.sigma = float(sigma)

    def evaluate_batch(self, query: FieldQuery):
        sigma = np.full(query.depths.shape, self.sigma)
        weights = np.where(query.visible, 0.0, -np.inf)
        return sigma, weights


PROVIDERS = {
    "gaussian": GaussianSurfaceField,
    "constant": ConstantField,
}


def make_provider(name: str, scene, **params) -> FieldProvider:
    if name not in PROVIDERS:
        raise ValueError(f"unknown provider {name!r}; available: {sorted(PROVIDERS)}")
    return PROVIDERS[name](scene, **params)


def softmax_blend(weights, visible, joint, rays):
    """Masked softmax blending applied identically to both feature streams.

    Args:
        weights: (S, V) raw view weights.
        visible: (S, V) bool; masked views are excluded from the softmax.
        joint: (S, V, C) per-view joint features.
        rays: (S, V, D) per-view ray features.

    Returns:
        ``(blended_joint, blended_rays, any_visible)``; rows with no visible
        view come back as zeros with ``any_visible == False``.
    """
    weights = np.asarray(weights, dtype=np.float64)
    visible = np.asarray(visible, dtype=bool)
    masked = np.where(visible, weights, -np.inf)
    any_visible = visible.any(axis=1)
    peak = np.max(masked, axis=1, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    expw = np.where(visible, np.exp(masked - peak), 0.0)
    denom = expw.sum(axis=1, keepdims=True)
    denom = np.where(denom > 0.0, denom, 1.0)
    probs = expw / denom
    blended_joint = np.einsum("sv,svc->sc", probs, joint)
    blended_rays = np.einsum("sv,svd->sd", probs, rays)
    return blended_joint, blended_rays, any_visible


def blend_features(weights, encoding: SphereEncoding):
    """Blend one sphere's per-view features with softmax weights.

    Returns ``(joint, rays, any_visible)``.  With no visible view the features
    are zero and ``any_visible`` is False (consumed as empty space, not an
    error).
    """
    if encoding.rays is None:
        rays = np.zeros((len(encoding.visible), 0))
    else:
        rays = np.asarray(encoding.rays, dtype=np.float64)
    joint, blended_rays, any_visible = softmax_blend(
        np.asarray(weights, dtype=np.float64)[None, :],
        np.asarray(encoding.visible, dtype=bool)[None, :],
        np.asarray(encoding.joint, dtype=np.float64)[None, :, :],
        rays[None, :, :],
    )
    return joint[0], blended_rays[0], bool(any_visible[0])


def transmittance(sigmas) -> np.ndarray:
    """Accumulated transmittance in front of each sample.

    ``tau[0] == 1`` and ``tau[n] = exp(-sum(sigmas[:n]))``; densities are
    unit-free opacities, no spacing factor is applied.

    Raises:
        ValueError: on negative densities.
    """
    sig = np.asarray(sigmas, dtype=np.float64)
    if np.any(sig < 0):
        raise ValueError("densities must be non-negative")
    upstream = np.concatenate([[0.0], np.cumsum(sig)[:-1]])
    return np.exp(-upstream)


@dataclass
class RadianceSample:
    """One evaluated sphere: density, blended features and bookkeeping."""

    sigma: float
    weights: np.ndarray  # (V,) raw view weights
    joint: np.ndarray  # (C,) blended joint features
    rays: np.ndarray  # (D,) blended ray features
    depth: float
    masked: bool = False  # no visible view; treated as empty space
    tau: float | None = None  # filled by accumulate()


@dataclass(frozen=True)
class BundleFeatures:
    """Volume-rendered features of one bundle."""

    coarse: np.ndarray  # (C,)
    rays: np.ndarray  # (D,)
    opacity: float  # sum of accumulation weights, in [0, 1]


def accumulate(samples) -> BundleFeatures:
    """Front-to-back accumulation of one cone's ordered samples.

    Fills each sample's ``tau`` and returns the weighted feature sums plus the
    accumulated opacity.  Masked samples must carry zero density, so they
    neither contribute nor attenuate.

    Raises:
        ValueError: if samples are not sorted by increasing depth, or on
            negative densities.
    """
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    depths = np.array([s.depth for s in samples])
    if np.any(np.diff(depths) < 0):
        raise ValueError("samples must be sorted by increasing depth")
    sigmas = np.array([0.0 if s.masked else s.sigma for s in samples])
    taus = transmittance(sigmas)
    weights = taus * (1.0 - np.exp(-sigmas))
    for s, tau in zip(samples, taus):
        s.tau = float(tau)
    joint = np.stack([s.joint for s in samples])
    rays = np.stack([s.rays for s in samples])
    return BundleFeatures(
        coarse=weights @ joint,
        rays=weights @ rays,
        opacity=float(weights.sum()),
    )
