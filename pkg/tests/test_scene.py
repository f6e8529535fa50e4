import json
import math

import numpy as np
import pytest

from bundlerender.errors import SceneFormatError
from bundlerender.rigs import make_camera, make_default_rig
from bundlerender.scene import (
    PRESETS,
    gen_scene,
    preset_scene,
    render_source_views,
)

from conftest import constant_scene


class TestPresets:
    def test_all_presets_build(self):
        for name in PRESETS:
            scene = preset_scene(name)
            assert scene.z_min < scene.z_max

    def test_flat_card_depth_constant(self):
        scene = preset_scene("flat-card")
        cam = make_camera(32, 32)
        depth = scene.depth_grid(cam)
        np.testing.assert_allclose(depth, 3.0, atol=1e-12)

    def test_two_planes_depth_bimodal(self):
        scene = preset_scene("two-planes")
        cam = make_camera(64, 64)
        depth = scene.depth_grid(cam)
        values = np.unique(depth)
        np.testing.assert_allclose(values, [2.0, 4.0], atol=1e-12)
        # analytic coverage oracle: near plane spans x in [-1.34, 0.04],
        # y in [-1.2, 1.2] at z=2; count pixel centers inside
        xs = (np.arange(64) + 0.5 - cam.cx) * cam.dx * 2.0 / cam.f
        ys = (np.arange(64) + 0.5 - cam.cy) * cam.dy * 2.0 / cam.f
        inside = (
            (np.abs(xs[None, :] - (-0.65)) <= 0.69)
            & (np.abs(ys[:, None]) <= 1.2)
        )
        assert int((depth == 2.0).sum()) == int(inside.sum())

    def test_two_planes_has_occlusion_edge_off_bundle_grid(self):
        scene = preset_scene("two-planes")
        for width in (64, 128, 256):
            cam = make_camera(width, width)
            depth = scene.depth_grid(cam)
            row = depth[width // 2]
            (edges,) = np.nonzero(np.abs(np.diff(row)) > 0.5)
            assert edges.size == 1
            for size in (2, 4):
                # the two pixels astride the edge share a bundle
                assert (edges[0] // size) == ((edges[0] + 1) // size)

    def test_empty_scene_infinite_depth(self):
        scene = gen_scene("empty")
        cam = make_camera(16, 16)
        assert np.all(np.isinf(scene.depth_grid(cam)))

    def test_unknown_preset(self):
        with pytest.raises(SceneFormatError, match="unknown preset"):
            preset_scene("missing-preset")


class TestSceneQueries:
    def test_depth_matches_plane_intersection_oracle(self):
        scene = preset_scene("two-planes")
        cam = make_camera(32, 32)
        rng = np.random.default_rng(3)
        for _ in range(100):
            px = float(rng.uniform(0, 32))
            py = float(rng.uniform(0, 32))
            depth = float(scene.depth_at(cam, px, py))
            # independent ray-plane oracle: intersect the pixel ray with both
            # fronto-parallel planes and keep the nearest covered hit
            direction = cam.plane_directions(np.float64(px), np.float64(py))
            expected = math.inf
            for prim in scene.primitives:
                z = prim.center[2]
                t = z / direction[2]
                hit = cam.center + t * np.asarray(direction)
                if (abs(hit[0] - prim.center[0]) <= prim.half_extent[0]
                        and abs(hit[1] - prim.center[1]) <= prim.half_extent[1]):
                    expected = min(expected, z)
            assert depth == pytest.approx(expected, abs=1e-9)

    def test_rendered_depth_agrees_with_query(self):
        scene = preset_scene("textured-planes")
        cam = make_camera(24, 24)
        _, depth = render_source_views(scene, [cam])[0]
        np.testing.assert_allclose(depth, scene.depth_grid(cam), atol=1e-9)

    def test_sphere_primitive_depth(self):
        scene = gen_scene({
            "version": 1,
            "depth_range": [1.0, 5.0],
            "primitives": [{
                "kind": "sphere", "center": [0.0, 0.0, 3.0], "radius": 0.5,
                "texture": {"kind": "solid", "color": [1.0, 0.0, 0.0]},
            }],
        })
        cam = make_camera(16, 16)
        depth = float(scene.depth_at(cam, 8.0, 8.0))  # through the center
        assert depth == pytest.approx(2.5, abs=1e-12)

    def test_missed_pixels_black(self):
        scene = gen_scene("empty")
        cam = make_camera(8, 8)
        image, depth = render_source_views(scene, [cam])[0]
        np.testing.assert_array_equal(image, 0.0)
        assert np.all(np.isinf(depth))

    def test_doubling_texture_frequency_doubles_spectrum_peak(self):
        def card(freq):
            return gen_scene({
                "version": 1,
                "seed": 1,
                "depth_range": [2.5, 3.5],
                "primitives": [{
                    "kind": "plane", "center": [0.0, 0.0, 3.0],
                    "u_axis": [1.0, 0.0, 0.0], "v_axis": [0.0, 1.0, 0.0],
                    "half_extent": [6.0, 6.0],
                    "texture": {"kind": "sinusoid", "base": [0.5, 0.5, 0.5],
                                "amplitude": [0.4, 0.4, 0.4], "frequency": freq,
                                "angle_deg": 0.0, "phase": 0.1},
                }],
            })

        cam = make_camera(128, 128)

        def peak_bin(scene):
            image, _ = render_source_views(scene, [cam])[0]
            signal = image[:, :, 0].mean(axis=0)
            spectrum = np.abs(np.fft.rfft(signal - signal.mean()))
            return int(np.argmax(spectrum))

        low = peak_bin(card(2.0))
        high = peak_bin(card(4.0))
        assert high == 2 * low


class TestSceneFormat:
    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "primitives": [,]\n}')
        with pytest.raises(SceneFormatError, match="line 2"):
            gen_scene(str(path))

    def test_missing_field_names_the_path(self):
        with pytest.raises(SceneFormatError, match=r"primitives\[0\]"):
            gen_scene({"version": 1, "depth_range": [1, 2],
                       "primitives": [{"kind": "plane"}]})

    def test_unknown_texture_kind(self):
        with pytest.raises(SceneFormatError, match="unknown texture kind"):
            gen_scene({"version": 1, "depth_range": [1, 2], "primitives": [{
                "kind": "plane", "center": [0, 0, 3], "u_axis": [1, 0, 0],
                "v_axis": [0, 1, 0], "half_extent": [1, 1],
                "texture": {"kind": "wood"},
            }]})

    def test_non_orthogonal_axes_rejected(self):
        with pytest.raises(SceneFormatError, match="orthogonal"):
            gen_scene({"version": 1, "depth_range": [1, 2], "primitives": [{
                "kind": "plane", "center": [0, 0, 3], "u_axis": [1, 0, 0],
                "v_axis": [1, 0, 0], "half_extent": [1, 1],
                "texture": {"kind": "solid", "color": [0.5, 0.5, 0.5]},
            }]})

    def test_bad_depth_range_rejected(self):
        with pytest.raises(SceneFormatError, match="depth_range"):
            gen_scene({"version": 1, "depth_range": [4.0, 2.0], "primitives": []})

    def test_unsupported_version(self):
        with pytest.raises(SceneFormatError, match="version"):
            gen_scene({"version": 99, "depth_range": [1, 2], "primitives": []})

    def test_seed_determinism(self):
        spec = {
            "version": 1, "seed": 5, "depth_range": [2.5, 3.5],
            "primitives": [{
                "kind": "plane", "center": [0, 0, 3], "u_axis": [1, 0, 0],
                "v_axis": [0, 1, 0], "half_extent": [6, 6],
                "texture": {"kind": "sinusoid", "base": [0.5, 0.5, 0.5],
                            "amplitude": [0.3, 0.3, 0.3], "frequency": 2.0,
                            "phase": "random"},
            }],
        }
        cam = make_camera(16, 16)
        img_a = render_source_views(gen_scene(json.loads(json.dumps(spec))), [cam])[0][0]
        img_b = render_source_views(gen_scene(json.loads(json.dumps(spec))), [cam])[0][0]
        np.testing.assert_array_equal(img_a, img_b)
        other = json.loads(json.dumps(spec))
        other["seed"] = 6
        img_c = render_source_views(gen_scene(other), [cam])[0][0]
        assert not np.array_equal(img_a, img_c)


class TestRigs:
    def test_default_rig_layout(self):
        rig = make_default_rig(32, 24, n_sources=3, baseline=0.5)
        assert len(rig) == 4
        np.testing.assert_array_equal(rig[0].center, 0.0)
        np.testing.assert_allclose(rig[1].center, [-0.5, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(rig[2].center, [0.5, 0.0, 0.0], atol=1e-15)

    def test_source_count_validated(self):
        with pytest.raises(ValueError):
            make_default_rig(32, 32, n_sources=0)

    def test_constant_scene_fixture_covers_frame(self):
        scene = constant_scene()
        cam = make_camera(16, 16)
        image, depth = render_source_views(scene, [cam])[0]
        expected = np.broadcast_to([0.3, 0.5, 0.7], image.shape)
        np.testing.assert_allclose(image, expected, atol=1e-12)
        np.testing.assert_allclose(depth, 3.0, atol=1e-12)
