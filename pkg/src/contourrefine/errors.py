"""Exception types shared across the package.

All input-contract violations derive from ``InputError`` (a ``ValueError``)
so callers such as the CLI can map them to a single exit code. Failures of
the numerical machinery itself derive from ``NumericalError``.
"""


class InputError(ValueError):
    """An argument violates an operation's contract."""


class ConnectivityError(InputError):
    """Mesh faces are inconsistent with the expected template topology."""


class EmptySketchError(InputError):
    """A sketch or stroke image contains no pen-stroke pixels."""


class MaskBorderError(InputError):
    """A foreground mask touches the image border, so flood filling from a
    corner is ambiguous."""


class OpenContourError(InputError):
    """A sketch's external contour does not enclose a region, so it cannot be
    turned into a foreground mask."""


class NumericalError(RuntimeError):
    """The optimizer or an objective produced non-finite values."""

    def __init__(self, message, step=None):
        if step is not None:
            message = f"{message} (at step {step})"
        super().__init__(message)
        self.step = step
