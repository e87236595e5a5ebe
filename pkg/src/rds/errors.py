"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A precondition on an argument (shape, range, sign) was violated."""


class DomainError(ArithmeticError):
    """An operation was evaluated where it is undefined (e.g. division by a zero noise level)."""


class UnsupportedOperation(NotImplementedError):
    """The requested operation is not available for this kind of object."""


class DegenerateDirection(ArithmeticError):
    """A line-search denominator vanished along the current search direction."""


class NumericalFailure(RuntimeError):
    """A solver produced a non-finite iterate.

    ``iteration`` is the inner iteration index and ``step`` the outer
    sampler step, when known.
    """

    def __init__(self, message, iteration=None, step=None):
        self.iteration = iteration
        self.step = step
        parts = [message]
        if step is not None:
            parts.append(f"outer step {step}")
        if iteration is not None:
            parts.append(f"inner iteration {iteration}")
        super().__init__(", ".join(parts))


class FormatError(ValueError):
    """A binary file or stream did not parse; ``offset`` is the failing byte position."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


class ConfigError(InvalidArgument):
    """An experiment configuration failed validation; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
