"""Exception hierarchy shared by all ponfog modules."""

from __future__ import annotations


class PonFogError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(PonFogError, ValueError):
    """A parameter set violates a documented precondition."""


class CapacityExceeded(PonFogError):
    """The requested deployment does not fit the equipment limits."""


class SamePath(PonFogError, ValueError):
    """A path was requested from a node to itself."""


class SelfPair(PonFogError, ValueError):
    """A wavelength was requested for a source equal to its destination."""


class OutOfRange(PonFogError, IndexError):
    """An endpoint index or label is not part of the routing map."""


class TooLarge(PonFogError, ValueError):
    """An exhaustive search was asked for an instance beyond its bound."""


class InvalidRequest(PonFogError, ValueError):
    """A flow request cannot be simulated."""


class MalformedTrace(PonFogError):
    """A simulation trace breaks its ordering invariants."""


class ConfigError(PonFogError):
    """A configuration or input file could not be loaded."""
