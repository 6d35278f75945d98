"""Exception hierarchy; `app.py` maps `exit_code` to the process exit status."""


class LabError(Exception):
    exit_code = 1


class PreconditionError(LabError, ValueError):
    """Invalid input, range failure or domain error."""

    exit_code = 2


class ResourceCapError(LabError, RuntimeError):
    """A configured table, grid or evaluation cap would be exceeded."""

    exit_code = 3


class ConvergenceError(ResourceCapError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved tolerance {achieved:.3e})")
        self.achieved = achieved


class VerificationError(LabError):
    exit_code = 4
