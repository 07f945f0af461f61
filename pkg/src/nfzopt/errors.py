class NfzError(Exception):
    """Base class for errors raised by nfzopt."""


class GeometryError(NfzError, ValueError):
    """Inner boundary lies outside the outer boundary somewhere."""


class CapabilityError(NfzError):
    """The requested operation needs information the inputs do not provide."""


class InfeasibleBudgetError(NfzError, ValueError):
    """Even clearing the whole region cannot eliminate the required interference."""


class ConfigError(NfzError, ValueError):
    """A scenario file is malformed. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
