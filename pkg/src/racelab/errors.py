"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to.
"""


class RaceLabError(Exception):
    exit_code = 1


class ConfigError(RaceLabError, ValueError):
    """Invalid input to an operation (out-of-range argument, bad residue set)."""

    exit_code = 2


class DataError(RaceLabError, ValueError):
    """Malformed or inconsistent data (zero files, horizons, sieve limits)."""

    exit_code = 3


class ConvergenceError(RaceLabError, ArithmeticError):
    """A numerical routine failed to reach its requested tolerance."""

    exit_code = 4
