"""Glow-removal and transmission-estimation networks.

Both models share a contextual block: an entry stage lifts the image into F
feature channels, three parallel paths of three 3x3 convolutions at dilations
1, 2, and 3 gather context at growing scale, and their sum is fused by one
more 3x3 convolution.  The glow model applies this block recursively,
predicting per step a glow-probability map, nonnegative streak layers, and a
residual that is subtracted from the running image.  The transmission model
runs the block once and squashes a single output channel through a sigmoid.
"""

from dataclasses import dataclass

import numpy as np

from .engine import (
    INIT_STD,
    Tensor,
    bce,
    channel_softmax,
    concat_channels,
    conv2d,
    load_checkpoint,
    mean,
    mse,
    mul,
    relu,
    save_checkpoint,
    sigmoid,
    split_channels,
    sub,
)
from .engine.optim import gaussian_init
from .errors import CheckpointError, DimensionError, ParameterError

DEFAULT_FEATURES = 16
DEFAULT_TAU = 3
PATH_DILATIONS = (1, 2, 3)
CONVS_PER_PATH = 3


@dataclass
class LossConfig:
    lambda1: float = 0.1  # streak/reconstruction prior weight
    lambda2: float = 0.05  # glow-mask cross-entropy weight

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ParameterError("loss weights must be nonnegative")


class Conv:
    """A single conv layer owning its weight/bias tensors."""

    def __init__(self, in_channels, out_channels, dilation=1, kernel=3):
        self.dilation = dilation
        self.weight = Tensor(
            np.zeros((out_channels, in_channels, kernel, kernel), dtype=np.float32),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_channels, dtype=np.float32), requires_grad=True)

    def init(self, rng, std=INIT_STD):
        self.weight.data = gaussian_init(self.weight.shape, rng, std)
        self.bias.data = np.zeros_like(self.bias.data)

    def __call__(self, x):
        return conv2d(x, self.weight, self.bias, self.dilation)

    def named(self, prefix):
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}


class ContextualDilatedBlock:
    """Entry convs + three dilated paths + fusion; optional recurrence feedback."""

    def __init__(self, in_channels=3, features=DEFAULT_FEATURES, feedback=True):
        self.features = features
        self.entry = [Conv(in_channels, features), Conv(features, features)]
        self.paths = [
            [Conv(features, features, dilation=d) for _ in range(CONVS_PER_PATH)]
            for d in PATH_DILATIONS
        ]
        self.fuse = Conv(features, features)
        self.gate = Conv(features, features, kernel=1) if feedback else None

    def __call__(self, x, prev_features=None):
        h = x
        for conv in self.entry:
            h = relu(conv(h))
        if prev_features is not None:
            if self.gate is None:
                raise ParameterError("block built without a feedback path")
            h = h + self.gate(prev_features)
        agg = None
        for path in self.paths:
            a = h
            for conv in path:
                a = relu(conv(a))
            agg = a if agg is None else agg + a
        return relu(self.fuse(agg))

    def layers(self, prefix):
        out = {}
        for i, conv in enumerate(self.entry):
            out[f"{prefix}.entry{i}"] = conv
        for d, path in zip(PATH_DILATIONS, self.paths):
            for i, conv in enumerate(path):
                out[f"{prefix}.path{d}.conv{i}"] = conv
        out[f"{prefix}.fuse"] = self.fuse
        if self.gate is not None:
            out[f"{prefix}.gate"] = self.gate
        return out


class _ModelBase:
    def _layer_map(self):
        raise NotImplementedError

    def parameters(self):
        params = {}
        for prefix, conv in self._layer_map().items():
            params.update(conv.named(prefix))
        return params

    def init(self, rng, std=INIT_STD):
        for conv in self._layer_map().values():
            conv.init(rng, std)
        return self

    def zero_grad(self):
        for t in self.parameters().values():
            t.zero_grad()

    def param_arrays(self):
        return {name: t.data for name, t in self.parameters().items()}

    def load_arrays(self, arrays):
        params = self.parameters()
        missing = set(params) - set(arrays)
        if missing:
            raise CheckpointError(f"checkpoint missing parameters: {sorted(missing)}")
        for name, t in params.items():
            if arrays[name].shape != t.shape:
                raise CheckpointError(
                    f"{name}: checkpoint shape {arrays[name].shape} != model {t.shape}"
                )
            t.data = arrays[name].astype(np.float32).copy()
        return self


class _GlowStage:
    """One parameter set: contextual block plus the three prediction heads."""

    def __init__(self, features):
        f = features
        self.block = ContextualDilatedBlock(3, f, feedback=True)
        self.head_glow = Conv(f, 2)
        self.head_streak = [Conv(f + 1, f), Conv(f, 3)]
        self.head_residual = Conv(f + 1 + 3 + 3, 3)

    def layers(self, prefix):
        out = dict(self.block.layers(f"{prefix}block"))
        out[f"{prefix}head_glow"] = self.head_glow
        out[f"{prefix}head_streak0"] = self.head_streak[0]
        out[f"{prefix}head_streak1"] = self.head_streak[1]
        out[f"{prefix}head_residual"] = self.head_residual
        return out


class DeGlowModel(_ModelBase):
    """Recurrent residual glow removal.

    tied=True reuses one parameter set across all recurrences; tied=False
    keeps an independent set per step.
    """

    kind = "deglow"

    def __init__(self, features=DEFAULT_FEATURES, tau=DEFAULT_TAU, tied=True):
        if tau < 1:
            raise ParameterError(f"tau must be >= 1, got {tau}")
        self.features = features
        self.tau = tau
        self.tied = tied
        n_stages = 1 if tied else tau
        self.stages = [_GlowStage(features) for _ in range(n_stages)]

    def _layer_map(self):
        out = {}
        for i, stage in enumerate(self.stages):
            prefix = "" if self.tied else f"step{i}."
            out.update(stage.layers(prefix))
        return out

    def stage(self, t):
        return self.stages[0] if self.tied else self.stages[min(t, len(self.stages) - 1)]

    def step(self, image, prev_features=None, t=0):
        """One recurrence: returns (residual, glow_prob, streaks, features)."""
        image = image if isinstance(image, Tensor) else Tensor(image)
        if len(image.shape) != 4 or image.shape[1] != 3:
            raise DimensionError(f"expected N x 3 x H x W input, got {image.shape}")
        stage = self.stage(t)
        feats = stage.block(image, prev_features)
        logits = stage.head_glow(feats)
        probs = channel_softmax(logits)
        glow_prob, _ = split_channels(probs, [1, 1])
        s = concat_channels(feats, glow_prob)
        for conv in stage.head_streak[:-1]:
            s = relu(conv(s))
        streaks = relu(stage.head_streak[-1](s))
        masked = sub(image, mul(glow_prob, streaks))
        residual = stage.head_residual(concat_channels(feats, glow_prob, streaks, masked))
        return residual, glow_prob, streaks, feats


@dataclass
class UnrollStep:
    residual: Tensor
    glow_prob: Tensor
    streaks: Tensor
    restored: Tensor  # J_t = I_t - residual


def deglow_step(image, model):
    """Single application of the glow network: (residual, glow_prob, streaks)."""
    residual, glow_prob, streaks, _ = model.step(image)
    return residual, glow_prob, streaks


def deglow_unroll(image, model, tau=None):
    """Iterate J_t = I_t - eps_t, feeding J_t back as the next input.

    Returns (final restored image, list of per-step outputs).
    """
    tau = model.tau if tau is None else tau
    if tau < 1:
        raise ParameterError(f"tau must be >= 1, got {tau}")
    current = image if isinstance(image, Tensor) else Tensor(image)
    feats = None
    trace = []
    for t in range(tau):
        residual, glow_prob, streaks, feats = model.step(current, feats, t)
        restored = sub(current, residual)
        trace.append(UnrollStep(residual, glow_prob, streaks, restored))
        current = restored
    return current, trace


def deglow_loss(trace, targets, config=None):
    """Joint per-step loss summed over the unroll.

    targets: dict with 'haze' (N,3,H,W), 'streak' (N,3,H,W) and binary
    'glow' (N,1,H,W).  Per step: reconstruction MSE, plus lambda1 times the
    streak and reconstruction prior terms, plus lambda2 times the glow-mask
    cross-entropy.
    """
    config = config or LossConfig()
    j_true = np.asarray(targets["haze"])
    s_true = np.asarray(targets["streak"])
    g_true = np.asarray(targets["glow"])
    if not np.all((g_true == 0) | (g_true == 1)):
        raise ParameterError("glow target must be binary")
    total = None
    for step in trace:
        direct = mse(step.restored, j_true)
        prior = mse(step.streaks, s_true) + mse(step.restored, j_true)
        glow = bce(step.glow_prob, g_true)
        loss_t = direct + mul(prior, config.lambda1) + mul(glow, config.lambda2)
        total = loss_t if total is None else total + loss_t
    return total


class DeHazeModel(_ModelBase):
    """Single-recurrence transmission estimator: block + 1-channel sigmoid head."""

    kind = "dehaze"
    tau = 1
    tied = True

    def __init__(self, features=DEFAULT_FEATURES):
        self.features = features
        self.block = ContextualDilatedBlock(3, features, feedback=False)
        self.head = Conv(features, 1)

    def _layer_map(self):
        out = dict(self.block.layers("block"))
        out["head"] = self.head
        return out


def dehaze_forward(image, model, t_min=None):
    """Estimate the transmission map of a (deglowed) haze image.

    Returns a Tensor of sigmoid outputs for training; with t_min set,
    returns a plain array floored at t_min for inference.
    """
    image = image if isinstance(image, Tensor) else Tensor(image)
    if len(image.shape) != 4 or image.shape[1] != 3:
        raise DimensionError(f"expected N x 3 x H x W input, got {image.shape}")
    out = sigmoid(model.head(model.block(image)))
    if t_min is None:
        return out
    return np.maximum(out.data, t_min)


def dehaze_loss(t_pred, t_true):
    """Mean squared error between predicted and reference transmission maps."""
    return mse(t_pred, np.asarray(t_true.data if isinstance(t_true, Tensor) else t_true))


# ---------------------------------------------------------------------------
# checkpointing: architecture descriptor rides along as meta.* records

_META_KINDS = {"deglow": 0.0, "dehaze": 1.0}


def save_model(model, path):
    params = {name: t.data for name, t in model.parameters().items()}
    params["meta.kind"] = np.array([_META_KINDS[model.kind]], dtype=np.float32)
    params["meta.features"] = np.array([model.features], dtype=np.float32)
    params["meta.tau"] = np.array([model.tau], dtype=np.float32)
    params["meta.tied"] = np.array([1.0 if model.tied else 0.0], dtype=np.float32)
    save_checkpoint(path, params)


def load_model(path):
    arrays = load_checkpoint(path)
    try:
        kind = float(arrays.pop("meta.kind")[0])
        features = int(arrays.pop("meta.features")[0])
        tau = int(arrays.pop("meta.tau")[0])
        tied = bool(arrays.pop("meta.tied")[0])
    except KeyError as e:
        raise CheckpointError(f"{path}: missing architecture descriptor {e}") from e
    if kind == _META_KINDS["deglow"]:
        model = DeGlowModel(features=features, tau=tau, tied=tied)
    elif kind == _META_KINDS["dehaze"]:
        model = DeHazeModel(features=features)
    else:
        raise CheckpointError(f"{path}: unknown model kind {kind}")
    return model.load_arrays(arrays)
