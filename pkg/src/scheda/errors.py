"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, FormatError -> 3,
NumericalError -> 4.
"""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class ConfigError(Exception):
    """An experiment configuration is invalid or inconsistent."""


class FormatError(Exception):
    """A data or checkpoint file is malformed."""


class NumericalError(Exception):
    """A non-finite value was produced where finite values are required."""
