"""Exception hierarchy for iterlil.

Every error raised on purpose by this package derives from IterlilError so
that the command line layer can map "our" failures to a config-error exit
code while letting genuine bugs propagate.
"""

from __future__ import annotations


class IterlilError(Exception):
    """Base class for all package-level errors."""


class InvalidParameterError(IterlilError):
    """A parameter is outside its documented domain (wrong sign, count, ...)."""


class DegenerateLawError(IterlilError):
    """Operation requires fluctuations but the step law has zero variance."""


class UnsupportedQueryError(IterlilError):
    """The law cannot answer this query (e.g. no closed-form perturbation CDF)."""


class OutOfHorizonError(IterlilError):
    """A query time exceeds the simulated horizon of a trajectory."""


class PopulationCapError(IterlilError):
    """A branching simulation exceeded the configured birth cap."""

    def __init__(self, message: str, generation: int | None = None):
        super().__init__(message)
        self.generation = generation


class GridError(IterlilError):
    """A numeric grid is malformed (bad step, excessive node count, ...)."""


class TableRangeError(IterlilError):
    """A lookup time lies beyond the range of a precomputed table."""


class DomainError(IterlilError):
    """Mathematical domain violation (e.g. iterated logarithm at t <= e)."""


class ConfigError(IterlilError):
    """Configuration file or command-line flags could not be interpreted."""
