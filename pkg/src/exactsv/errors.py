"""Exception hierarchy shared by the samplers, model and CLI."""


class ExactSvError(Exception):
    """Base class for all package errors."""


class ValidationError(ExactSvError, ValueError):
    """Invalid parameters or input files (CLI exit code 2)."""


class DegenerateYError(ExactSvError):
    """Scale variable is a point mass; coupling can never coalesce."""


class InvalidDeltaError(ValidationError):
    """Shape parameter outside the range a sampler supports."""


class IterationCapError(ExactSvError):
    """A sampler exceeded its primitive-draw budget (CLI exit code 3)."""


_CODES = {1: "iteration cap exceeded", 2: "out of memory in sampler stack"}


def raise_for_code(code: int) -> None:
    """Translate a kernel status code into an exception."""
    if code == 0:
        return
    if code == 1:
        raise IterationCapError(_CODES[1])
    raise ExactSvError(_CODES.get(code, f"kernel error {code}"))
