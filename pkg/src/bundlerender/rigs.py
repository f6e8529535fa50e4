"""Built-in camera rigs for the synthetic harness.

The default rig is a parallel multi-view setup: a target camera at the
origin looking along +z and source cameras displaced laterally.  The image
plane spans one world unit at the focal distance (pixel pitch 1/W), giving
a ~53 degree horizontal field of view.
"""

from __future__ import annotations

import numpy as np

from .camera import Camera
from .validation import check_positive, check_positive_int

_SOURCE_OFFSETS = (
    (-1.0, 0.0),
    (1.0, 0.0),
    (0.0, 0.75),
    (0.0, -0.75),
    (-1.0, 0.75),
    (1.0, -0.75),
)


def make_camera(width: int, height: int, position=(0.0, 0.0, 0.0)) -> Camera:
    """Axis-aligned camera at ``position`` looking along +z."""
    pos = np.asarray(position, dtype=np.float64)
    return Camera(
        f=1.0,
        cx=width / 2.0,
        cy=height / 2.0,
        dx=1.0 / width,
        dy=1.0 / width,
        rotation=np.eye(3),
        translation=-pos,
        width=width,
        height=height,
    )


def make_default_rig(width: int, height: int, n_sources: int = 3, baseline: float = 0.6):
    """Target camera plus ``n_sources`` laterally displaced source cameras.

    Returns ``[target, source_1, ...]``.
    """
    check_positive_int(width, "width")
    check_positive_int(height, "height")
    check_positive(baseline, "baseline")
    if not (1 <= n_sources <= len(_SOURCE_OFFSETS)):
        raise ValueError(f"n_sources must lie in [1, {len(_SOURCE_OFFSETS)}], got {n_sources}")
    cams = [make_camera(width, height)]
    for ox, oy in _SOURCE_OFFSETS[:n_sources]:
        cams.append(make_camera(width, height, (ox * baseline, oy * baseline, 0.0)))
    return cams
