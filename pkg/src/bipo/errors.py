"""Exception types. The CLI maps ConfigError to exit 2 and other BipoErrors to exit 3."""


class BipoError(Exception):
    pass


class ConfigError(BipoError, ValueError):
    """Invalid user input: grids, descriptors, cover specs, files."""


class EmptyDomainError(ConfigError):
    """A function is +inf at every grid point."""


class ConvexityError(BipoError, ValueError):
    """A sampled function fails the discrete convexity test where convexity is required."""
