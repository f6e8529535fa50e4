import numpy as np
import pytest

from bundlerender.fileio import read_pfm, read_png, write_pfm, write_png


class TestPng:
    def test_round_trip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.uniform(size=(12, 9, 3))
        path = tmp_path / "img.png"
        write_png(path, img)
        loaded = read_png(path)
        assert loaded.shape == img.shape
        assert np.abs(loaded - img).max() <= 0.5 / 255.0 + 1e-12

    def test_exact_for_quantized_values(self, tmp_path):
        img = (np.arange(48).reshape(4, 4, 3) % 256) / 255.0
        path = tmp_path / "img.png"
        write_png(path, img)
        np.testing.assert_array_equal(read_png(path), img)

    def test_rejects_bad_shape(self, tmp_path):
        with pytest.raises(ValueError):
            write_png(tmp_path / "bad.png", np.zeros((4, 4)))


class TestPfm:
    def test_round_trip_exact_float32(self, tmp_path):
        rng = np.random.default_rng(2)
        depth = rng.uniform(0.5, 10.0, size=(7, 5)).astype(np.float32).astype(np.float64)
        path = tmp_path / "depth.pfm"
        write_pfm(path, depth)
        np.testing.assert_array_equal(read_pfm(path), depth)

    def test_infinite_depths_survive(self, tmp_path):
        depth = np.full((3, 4), np.inf)
        depth[1, 2] = 2.5
        path = tmp_path / "depth.pfm"
        write_pfm(path, depth)
        loaded = read_pfm(path)
        assert np.isinf(loaded[0, 0])
        assert loaded[1, 2] == pytest.approx(2.5)

    def test_header_is_little_endian_grayscale(self, tmp_path):
        path = tmp_path / "depth.pfm"
        write_pfm(path, np.ones((2, 3)))
        raw = path.read_bytes()
        assert raw.startswith(b"Pf\n3 2\n-1.0\n")
        # 2*3 float32 payload after three header lines
        assert len(raw) == len(b"Pf\n3 2\n-1.0\n") + 24

    def test_rows_stored_bottom_up(self, tmp_path):
        depth = np.array([[1.0, 2.0], [3.0, 4.0]])
        path = tmp_path / "depth.pfm"
        write_pfm(path, depth)
        raw = path.read_bytes()
        payload = np.frombuffer(raw.split(b"\n", 3)[3], dtype="<f4")
        np.testing.assert_array_equal(payload, [3.0, 4.0, 1.0, 2.0])

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError):
            write_pfm(tmp_path / "bad.pfm", np.zeros((2, 2, 3)))

    def test_rejects_non_pfm(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"P6\n1 1\n255\n...")
        with pytest.raises(ValueError, match="not a PFM"):
            read_pfm(path)
