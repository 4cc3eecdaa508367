import numpy as np
import pytest

from nightdehaze.errors import DataError, DimensionError
from nightdehaze.imageio import bilinear_resize, read_pgm, read_ppm, write_pgm, write_ppm


class TestPpm:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        img = rng.uniform(0, 1, (13, 17, 3))
        p1 = tmp_path / "a.ppm"
        p2 = tmp_path / "b.ppm"
        write_ppm(p1, img)
        back = read_ppm(p1)
        write_ppm(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_quantization_error_bounded(self, tmp_path, rng):
        img = rng.uniform(0, 1, (8, 8, 3))
        path = tmp_path / "a.ppm"
        write_ppm(path, img)
        assert np.max(np.abs(read_ppm(path) - img)) <= 0.5 / 255 + 1e-12

    def test_header_comments_skipped(self, tmp_path):
        path = tmp_path / "c.ppm"
        path.write_bytes(b"P6\n# a comment\n2 1\n# another\n255\n" + bytes(6))
        img = read_ppm(path)
        assert img.shape == (1, 2, 3)
        assert np.all(img == 0)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.ppm"
        path.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
        with pytest.raises(DataError):
            read_ppm(path)

    def test_wrong_shape_rejected(self, tmp_path):
        with pytest.raises(DimensionError):
            write_ppm(tmp_path / "x.ppm", np.zeros((4, 4)))


class TestPgm:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        img = rng.uniform(0, 1, (9, 11))
        p1 = tmp_path / "a.pgm"
        p2 = tmp_path / "b.pgm"
        write_pgm(p1, img)
        write_pgm(p2, read_pgm(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_sixteen_bit_precision(self, tmp_path, rng):
        img = rng.uniform(0, 1, (8, 8))
        path = tmp_path / "a.pgm"
        write_pgm(path, img)
        assert np.max(np.abs(read_pgm(path) - img)) < 2e-5

    def test_binary_mask_round_trips_exactly(self, tmp_path, rng):
        mask = (rng.uniform(0, 1, (16, 16)) > 0.5).astype(float)
        path = tmp_path / "m.pgm"
        write_pgm(path, mask)
        assert np.array_equal(read_pgm(path), mask)

    def test_eight_bit_maxval_accepted(self, tmp_path):
        path = tmp_path / "m8.pgm"
        path.write_bytes(b"P5\n2 1\n255\n" + bytes([0, 255]))
        assert np.allclose(read_pgm(path), [[0.0, 1.0]])

    def test_unsupported_maxval_rejected(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n1 1\n1023\n\x00\x00")
        with pytest.raises(DataError):
            read_pgm(path)

    def test_truncated_header_rejected(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n4")
        with pytest.raises(DataError):
            read_pgm(path)


class TestBilinearResize:
    def test_same_size_is_copy(self, rng):
        img = rng.uniform(0, 1, (5, 7, 3))
        out = bilinear_resize(img, 5, 7)
        assert np.array_equal(out, img)
        assert out is not img

    def test_constant_image_stays_constant(self):
        out = bilinear_resize(np.full((10, 10), 0.42), 17, 23)
        assert np.allclose(out, 0.42)

    def test_target_shape(self, rng):
        assert bilinear_resize(rng.uniform(0, 1, (12, 8, 3)), 24, 30).shape == (24, 30, 3)
        assert bilinear_resize(rng.uniform(0, 1, (12, 8)), 6, 4).shape == (6, 4)

    def test_preserves_linear_ramp_mean(self):
        img = np.linspace(0, 1, 32)[None, :].repeat(32, axis=0)
        out = bilinear_resize(img, 16, 16)
        assert abs(out.mean() - img.mean()) < 1e-2
