class SqeTrackError(Exception):
    """Base class for errors raised by this package."""


class ParseError(SqeTrackError, ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class ValidationError(SqeTrackError, ValueError):
    pass


class UndefinedInputError(SqeTrackError, ValueError):
    """A statistic was requested on input where it is not defined (e.g. no trajectories)."""


class EstimationInfeasibleError(SqeTrackError, ValueError):
    """The single-switch model has no real solution for the observed pair counts."""
