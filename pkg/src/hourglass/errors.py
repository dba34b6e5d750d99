"""Exception types shared across the package."""


class HourglassError(Exception):
    """Base class for package-specific failures."""


class ConfigError(HourglassError, ValueError):
    """A configuration value or file is invalid.

    Messages carry a dotted location path (e.g. ``connections.w_I``) so CLI
    users can find the offending field.
    """


class BudgetError(HourglassError, RuntimeError):
    """An exhaustive computation would exceed its declared budget."""


class AllSitesFrozenError(HourglassError, RuntimeError):
    """No active site remains, so no next event exists."""


class InsufficientDataError(HourglassError, RuntimeError):
    """A statistical estimate was requested from too small a sample."""


class MixedSignError(HourglassError, ValueError):
    """An operation defined only for all-inhibitory interactions was asked
    to run on a configuration with excitatory links inside the active set."""
