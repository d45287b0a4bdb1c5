"""Exception types raised by clothopt."""


class ClothOptError(Exception):
    """Base class for all clothopt errors."""


class ConfigurationError(ClothOptError, ValueError):
    """Invalid mesh, obstacle, scene or optimizer parameters."""


class SceneFileError(ConfigurationError):
    """A scene document failed to parse or validate.

    ``location`` names the offending field (``"sim.dt"``) or the line/column of a
    syntax error.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class SimulationDiverged(ClothOptError, FloatingPointError):
    """Non-finite particle positions appeared during a time step."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"simulation diverged at time step {step}")


class TapeMismatchError(ClothOptError, RuntimeError):
    """The gradient tape does not match the rollout it is being used with."""


class OptimizerError(ClothOptError, RuntimeError):
    """The objective became non-finite; ``last_iterate`` is the last finite point."""

    def __init__(self, message: str, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)
