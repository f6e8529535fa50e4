import json

import numpy as np
import pytest
from click.testing import CliRunner

from bundlerender.camera import save_rig
from bundlerender.cli import main
from bundlerender.fileio import read_png, write_png
from bundlerender.rigs import make_default_rig


@pytest.fixture
def runner():
    return CliRunner()


class TestSceneGen:
    def test_list_presets(self, runner):
        result = runner.invoke(main, ["scene-gen", "--list-presets"])
        assert result.exit_code == 0
        assert "two-planes" in result.output

    def test_writes_loadable_scene(self, runner, tmp_path):
        out = tmp_path / "scene.json"
        result = runner.invoke(main, ["scene-gen", "-p", "two-planes", "-o", str(out)])
        assert result.exit_code == 0
        spec = json.loads(out.read_text())
        assert spec["depth_range"] == [2.0, 4.0]

    def test_unknown_preset_fails(self, runner, tmp_path):
        result = runner.invoke(
            main, ["scene-gen", "-p", "nope", "-o", str(tmp_path / "s.json")])
        assert result.exit_code != 0

    def test_seed_override(self, runner, tmp_path):
        out = tmp_path / "scene.json"
        runner.invoke(main, ["scene-gen", "-p", "flat-card", "--seed", "99",
                             "-o", str(out)])
        assert json.loads(out.read_text())["seed"] == 99


class TestRender:
    def test_render_preset_with_default_rig(self, runner, tmp_path):
        out = tmp_path / "img.png"
        report = tmp_path / "report.json"
        result = runner.invoke(main, [
            "render", "-s", "two-planes", "--width", "32", "--height", "32",
            "-K", "2", "-o", str(out), "--report", str(report),
        ])
        assert result.exit_code == 0, result.output
        assert read_png(out).shape == (32, 32, 3)
        data = json.loads(report.read_text())
        assert data["K"] == 2
        assert data["psnr"] > 10.0

    def test_render_scene_file_and_rig_file(self, runner, tmp_path):
        scene_path = tmp_path / "scene.json"
        runner.invoke(main, ["scene-gen", "-p", "flat-card", "-o", str(scene_path)])
        rig_path = tmp_path / "rig.json"
        save_rig(rig_path, make_default_rig(24, 24))
        out = tmp_path / "img.png"
        result = runner.invoke(main, [
            "render", "-s", str(scene_path), "--rig", str(rig_path),
            "--target-index", "0", "-o", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert read_png(out).shape == (24, 24, 3)

    def test_config_file_with_flag_override(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bundle_size": 4, "max_samples": 3}))
        out = tmp_path / "img.png"
        report = tmp_path / "report.json"
        result = runner.invoke(main, [
            "render", "-s", "two-planes", "--width", "32", "--height", "32",
            "--config", str(cfg), "-K", "2", "-o", str(out),
            "--report", str(report),
        ])
        assert result.exit_code == 0, result.output
        data = json.loads(report.read_text())
        assert data["K"] == 2  # flag wins
        assert data["N_max"] == 3  # config file value kept

    def test_invalid_config_key_fails(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bundle": 4}))
        result = runner.invoke(main, [
            "render", "-s", "two-planes", "--config", str(cfg),
            "-o", str(tmp_path / "img.png"),
        ])
        assert result.exit_code != 0

    def test_dump_sources_writes_png_and_pfm(self, runner, tmp_path):
        dump = tmp_path / "sources"
        result = runner.invoke(main, [
            "render", "-s", "flat-card", "--width", "16", "--height", "16",
            "-o", str(tmp_path / "img.png"), "--dump-sources", str(dump),
        ])
        assert result.exit_code == 0, result.output
        assert (dump / "source_0.png").exists()
        assert (dump / "source_0_depth.pfm").exists()

    def test_unknown_scene_fails(self, runner, tmp_path):
        result = runner.invoke(main, [
            "render", "-s", "missing.json", "-o", str(tmp_path / "img.png")])
        assert result.exit_code != 0


class TestOracle:
    def test_oracle_renders(self, runner, tmp_path):
        out = tmp_path / "oracle.png"
        result = runner.invoke(main, [
            "oracle", "-s", "two-planes", "--width", "24", "--height", "24",
            "-N", "4", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert read_png(out).shape == (24, 24, 3)


class TestBench:
    def test_bench_runs_config(self, runner, tmp_path):
        cfg = tmp_path / "bench.json"
        cfg.write_text(json.dumps({
            "scenes": ["flat-card"], "resolution": [24, 24],
            "bundle_sizes": [2], "max_samples": [6], "repetitions": 1,
        }))
        out_dir = tmp_path / "out"
        result = runner.invoke(main, ["bench", "-c", str(cfg), "-o", str(out_dir)])
        assert result.exit_code == 0, result.output
        assert (out_dir / "report.json").exists()
        assert (out_dir / "report.csv").exists()

    def test_bad_config_fails(self, runner, tmp_path):
        cfg = tmp_path / "bench.json"
        cfg.write_text(json.dumps({"scenes": ["nope"]}))
        result = runner.invoke(main, ["bench", "-c", str(cfg),
                                      "-o", str(tmp_path / "out")])
        assert result.exit_code != 0


class TestCompare:
    def test_identical_images(self, runner, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.uniform(size=(16, 16, 3))
        a = tmp_path / "a.png"
        write_png(a, img)
        report = tmp_path / "metrics.json"
        result = runner.invoke(main, ["compare", str(a), str(a),
                                      "--report", str(report)])
        assert result.exit_code == 0, result.output
        data = json.loads(report.read_text())
        assert data["psnr"] == math_inf_or(data["psnr"])
        assert data["ssim"] == pytest.approx(1.0, abs=1e-9)

    def test_size_mismatch_fails(self, runner, tmp_path):
        a = tmp_path / "a.png"
        b = tmp_path / "b.png"
        write_png(a, np.full((16, 16, 3), 0.5))
        write_png(b, np.full((16, 20, 3), 0.5))
        result = runner.invoke(main, ["compare", str(a), str(b)])
        assert result.exit_code != 0


def math_inf_or(value):
    assert value == float("inf")
    return value
