"""Exception types raised by the package."""


class FormatError(ValueError):
    """A tensor file is malformed or violates the declared symmetry."""


class DeflationError(RuntimeError):
    """A recovered component does not lie in the working subspace."""


class CompletionError(RuntimeError):
    """Complementary factors could not be recovered for a component."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
