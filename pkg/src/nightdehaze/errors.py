"""Shared exception types."""


class NightDehazeError(Exception):
    pass


class DimensionError(NightDehazeError):
    """Array shapes do not satisfy an operation's contract."""


class ParameterError(NightDehazeError):
    """A scalar parameter is outside its valid range."""


class DataError(NightDehazeError):
    """Array contents violate an operation's contract (non-finite, non-binary, ...)."""


class CheckpointError(NightDehazeError):
    """Checkpoint file is missing, truncated, or malformed."""


class TrainingDiverged(NightDehazeError):
    """Loss became NaN/Inf during training."""

    def __init__(self, iteration, loss):
        super().__init__(f"training diverged at iteration {iteration} (loss={loss})")
        self.iteration = iteration
        self.loss = loss
