"""Exception hierarchy shared by all modules."""


class HJError(Exception):
    """Base class for toolkit errors."""


class InputError(HJError, ValueError):
    """Malformed or inconsistent input (shapes, non-finite entries, bad configs)."""


class DomainError(HJError, ArithmeticError):
    """A function was evaluated outside the region where it is defined."""


class IntegrationError(HJError):
    """Raised when a vector field produces a non-finite value during integration."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time!r})")
        self.time = time
