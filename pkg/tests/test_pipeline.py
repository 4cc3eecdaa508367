import numpy as np
import pytest

from nightdehaze.atmospherics import recover_radiance
from nightdehaze.errors import DimensionError
from nightdehaze.networks import DeGlowModel, DeHazeModel
from nightdehaze.pipeline import STAGES, apply_tiled, receptive_radius, run_pipeline

from conftest import make_scene


@pytest.fixture(scope="module")
def models():
    rng = np.random.default_rng(0)
    deglow = DeGlowModel(features=4, tau=2).init(rng, std=0.05)
    dehaze = DeHazeModel(features=4).init(rng, std=0.05)
    return deglow, dehaze


class TestRunPipeline:
    def test_zero_deglow_reduces_to_atmospherics_inverse(self, rng):
        observed, _, t, _, _, _ = make_scene(1)
        deglow = DeGlowModel(features=4, tau=2)  # all-zero weights: identity
        dehaze = DeHazeModel(features=4)
        light = np.array([0.7, 0.7, 0.7])
        art = run_pipeline(
            observed, deglow, dehaze, t_override=t, light_override=light
        )
        expected = recover_radiance(observed, t, light, t_min=0.05)
        assert np.array_equal(art.radiance, expected)
        assert np.array_equal(art.deglowed, observed)

    def test_four_timed_stages(self, models, rng):
        observed, *_ = make_scene(2)
        art = run_pipeline(observed, *models)
        assert tuple(art.timings.keys()) == STAGES
        assert all(v >= 0 for v in art.timings.values())

    def test_artifact_shapes_and_ranges(self, models):
        observed, *_ = make_scene(3)
        art = run_pipeline(observed, *models)
        assert art.radiance.shape == observed.shape
        assert art.deglowed.shape == observed.shape
        assert art.transmission.shape == observed.shape[:2]
        assert art.light.shape == (3,)
        assert art.radiance.min() >= 0 and art.radiance.max() <= 1
        assert art.transmission.min() >= 0.05

    def test_deterministic(self, models):
        observed, *_ = make_scene(4)
        a = run_pipeline(observed, *models)
        b = run_pipeline(observed, *models)
        assert np.array_equal(a.radiance, b.radiance)
        assert np.array_equal(a.transmission, b.transmission)
        assert np.array_equal(a.light, b.light)

    def test_tiled_matches_whole_image(self, models):
        observed, *_ = make_scene(5, size=48)
        whole = run_pipeline(observed, *models)
        tiled = run_pipeline(observed, *models, tile_size=16)
        assert np.max(np.abs(tiled.radiance - whole.radiance)) < 1e-6
        assert np.max(np.abs(tiled.transmission - whole.transmission)) < 1e-6

    def test_tau_override(self, models):
        observed, *_ = make_scene(6)
        deglow, dehaze = models
        one = run_pipeline(observed, deglow, dehaze, tau=1)
        two = run_pipeline(observed, deglow, dehaze, tau=2)
        assert not np.array_equal(one.deglowed, two.deglowed)

    def test_bad_input_shape_rejected(self, models, rng):
        with pytest.raises(DimensionError):
            run_pipeline(rng.uniform(0, 1, (8, 8)), *models)


class TestApplyTiled:
    def test_small_image_bypasses_tiling(self, rng):
        x = rng.normal(0, 1, (1, 3, 8, 8)).astype(np.float32)
        calls = []

        def fn(patch):
            calls.append(patch.shape)
            return patch * 2

        out = apply_tiled(fn, x, tile_size=16, halo=4)
        assert len(calls) == 1
        assert np.array_equal(out, x * 2)

    def test_pointwise_function_is_exact(self, rng):
        x = rng.normal(0, 1, (1, 2, 30, 50)).astype(np.float32)
        out = apply_tiled(lambda p: p * 3 + 1, x, tile_size=16, halo=2)
        assert np.allclose(out, x * 3 + 1)

    def test_halo_covers_receptive_field(self, rng):
        # a box blur of radius 2 needs halo >= 2 to match the untiled result
        def blur(p):
            out = np.zeros_like(p)
            n, c, h, w = p.shape
            pad = np.pad(p, ((0, 0), (0, 0), (2, 2), (2, 2)))
            for dy in range(5):
                for dx in range(5):
                    out += pad[:, :, dy : dy + h, dx : dx + w]
            return out / 25.0

        x = rng.normal(0, 1, (1, 1, 20, 20))
        assert np.allclose(apply_tiled(blur, x, tile_size=7, halo=2), blur(x))

    def test_receptive_radius_scales_with_tau(self):
        deglow = DeGlowModel(features=4, tau=2)
        assert receptive_radius(deglow, tau=4) == 2 * receptive_radius(deglow, tau=2)
        assert receptive_radius(DeHazeModel(features=4)) > 0
