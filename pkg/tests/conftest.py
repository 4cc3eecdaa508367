import numpy as np
import pytest

from nightdehaze.synthesis import (
    SynthesisConfig,
    procedural_scene,
    sample_glow_sources,
    sample_scene_params,
    synthesize_example,
)
from nightdehaze.training import sample_from_layers


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def small_config(size=32, **overrides):
    defaults = dict(
        target_size=(size, size),
        glow_radius_range=(3.0, 10.0),
        sources_per_image_range=(1, 2),
    )
    defaults.update(overrides)
    return SynthesisConfig(**defaults)


def make_scene(seed, size=32, config=None):
    """One synthetic tuple (observed, haze, t, glow, clean, depth) at desk scale."""
    config = config or small_config(size)
    r = np.random.default_rng((seed, 0))
    height, width = config.target_size[1], config.target_size[0]
    clean, depth = procedural_scene(r, (height, width))
    beta, q, light = sample_scene_params(r, config)
    sources = sample_glow_sources(r, (height, width), q, config)
    observed, haze, t, glow = synthesize_example(clean, depth, beta, q, light, sources, config)
    return observed, haze, t, glow, clean, light


def make_training_sample(seed, size=32, config=None):
    observed, haze, t, glow, _, _ = make_scene(seed, size, config)
    return sample_from_layers(
        observed=observed,
        haze=haze,
        transmission=t,
        streak=glow.streak_sum(),
        glow=glow.mask,
    )
