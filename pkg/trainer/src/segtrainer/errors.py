"""Exception taxonomy. Everything raised on purpose derives from TrainerError."""


class TrainerError(Exception):
    pass


class ConfigError(TrainerError):
    """Invalid TrainSpec field or config file."""


class DataError(TrainerError):
    """Unusable dataset: missing manifest, malformed raster, bad mask values."""


class ScoringError(TrainerError):
    """The scoring CLI failed or returned something unparseable."""


class TrainingDiverged(TrainerError):
    """Loss went NaN/inf; carries enough context to debug the run."""

    def __init__(self, message, *, epoch=None, step=None, last_losses=None):
        super().__init__(message)
        self.epoch = epoch
        self.step = step
        self.last_losses = list(last_losses or [])
