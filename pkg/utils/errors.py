class QaeError(ValueError):
    """
    Base class for every error raised by the toolkit.

    Subclasses ValueError so callers that only guard against bad input
    with the builtin keep working.
    """


class InvalidArgumentError(QaeError):
    """Argument has the wrong shape, size or range for the operation."""


class CapacityError(QaeError):
    """
    Exact enumeration was requested above the configured cap.

    Args:
        requested (int): Number of spins (bits) that would be enumerated.
        cap (int): The cap that was exceeded.
    """

    def __init__(self, requested: int, cap: int):
        self.requested = requested
        self.cap = cap
        super().__init__(f"Enumeration of {requested} spins exceeds the cap of {cap} spins")


class DomainError(QaeError):
    """A closed-form expression was evaluated outside its domain."""


class ConfigurationError(QaeError):
    """Parameters or config file violate a model precondition."""


class ModelError(QaeError):
    """The chain or model is degenerate for the requested analysis."""
