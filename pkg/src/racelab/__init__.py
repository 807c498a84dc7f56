"""Random-model laboratory for the Shanks-Renyi prime race distribution."""

from racelab.errors import ConfigError, ConvergenceError, DataError, RaceLabError

__version__ = "0.1.0"

__all__ = ["ConfigError", "ConvergenceError", "DataError", "RaceLabError", "__version__"]
