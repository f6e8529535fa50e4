import numpy as np
import pytest

from bundlerender.camera import Camera
from bundlerender.renderer import make_source_views
from bundlerender.rigs import make_default_rig
from bundlerender.scene import gen_scene


def identity_camera(width=8, height=8, f=1.0, pitch=None):
    """Camera at the origin looking along +z with square pixels."""
    pitch = pitch if pitch is not None else 1.0 / width
    return Camera(
        f=f, cx=width / 2.0, cy=height / 2.0, dx=pitch, dy=pitch,
        rotation=np.eye(3), translation=np.zeros(3), width=width, height=height,
    )


def random_rotation(rng):
    """Uniform-ish random rotation via QR with positive determinant."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_camera(rng, width=16, height=12):
    rot = random_rotation(rng)
    center = rng.uniform(-2.0, 2.0, size=3)
    return Camera(
        f=rng.uniform(0.5, 2.0),
        cx=width / 2.0 + rng.uniform(-1.0, 1.0),
        cy=height / 2.0 + rng.uniform(-1.0, 1.0),
        dx=rng.uniform(0.01, 0.1),
        dy=rng.uniform(0.01, 0.1),
        rotation=rot,
        translation=-rot @ center,
        width=width,
        height=height,
    )


def constant_scene(color=(0.3, 0.5, 0.7), depth=3.0):
    """Full-frame solid-color plane; every default-rig pixel hits it."""
    return gen_scene({
        "version": 1,
        "seed": 0,
        "depth_range": [depth - 0.5, depth + 0.5],
        "primitives": [{
            "kind": "plane",
            "center": [0.0, 0.0, depth],
            "u_axis": [1.0, 0.0, 0.0],
            "v_axis": [0.0, 1.0, 0.0],
            "half_extent": [6.0, 6.0],
            "texture": {"kind": "solid", "color": list(color)},
        }],
    })


@pytest.fixture(scope="session")
def two_planes_64():
    """two-planes preset with a 64x64 default rig: (scene, target, views)."""
    scene = gen_scene("two-planes")
    rig = make_default_rig(64, 64)
    return scene, rig[0], make_source_views(scene, rig[1:])
