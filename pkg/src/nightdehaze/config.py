"""Flat key=value configuration files with [sections], via configparser.

Recognized sections: [synthesis], [training], [loss], [pipeline].  Every key
is optional; missing keys keep the dataclass defaults.
"""

import configparser
import os

from .errors import ParameterError
from .networks import LossConfig
from .pipeline import PipelineConfig
from .synthesis import SynthesisConfig
from .training import TrainSchedule


def _pair(text, cast=float):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ParameterError(f"expected two comma-separated values, got {text!r}")
    return (cast(parts[0]), cast(parts[1]))


_SYNTHESIS_FIELDS = {
    "beta_range": lambda s: _pair(s),
    "beta_samples_per_image": int,
    "q_range": lambda s: _pair(s),
    "q_samples_per_image": int,
    "light_range": lambda s: _pair(s),
    "target_size": lambda s: _pair(s, int),
    "use_taylor_glow": lambda s: s.lower() in ("1", "true", "yes"),
    "sources_per_image_range": lambda s: _pair(s, int),
    "glow_radius_range": lambda s: _pair(s),
    "rng_seed": int,
}

_TRAINING_FIELDS = {
    "learning_rate": float,
    "momentum": float,
    "weight_decay": float,
    "batch_size": int,
    "max_iterations": int,
    "plateau_patience": int,
    "plateau_min_improvement": float,
    "val_interval": int,
    "checkpoint_interval": int,
    "seed": int,
}

_LOSS_FIELDS = {"lambda1": float, "lambda2": float}

_PIPELINE_FIELDS = {
    "deglow_checkpoint": str,
    "dehaze_checkpoint": str,
    "tau": int,
    "t_min": float,
    "tile_size": int,
}


def _section(parser, name, fields):
    out = {}
    if parser.has_section(name):
        for key, value in parser.items(name):
            if key not in fields:
                raise ParameterError(f"unknown key '{key}' in [{name}]")
            out[key] = fields[key](value)
    return out


def load_config(path):
    """Parse a config file into the four per-module config objects."""
    if not os.path.exists(path):
        raise ParameterError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    return {
        "synthesis": SynthesisConfig(**_section(parser, "synthesis", _SYNTHESIS_FIELDS)),
        "training": TrainSchedule(**_section(parser, "training", _TRAINING_FIELDS)),
        "loss": LossConfig(**_section(parser, "loss", _LOSS_FIELDS)),
        "pipeline": PipelineConfig(**_section(parser, "pipeline", _PIPELINE_FIELDS)),
    }


def default_config():
    return {
        "synthesis": SynthesisConfig(),
        "training": TrainSchedule(),
        "loss": LossConfig(),
        "pipeline": PipelineConfig(),
    }
