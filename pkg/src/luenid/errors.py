"""Exception types raised by the luenid library."""


class LuenidError(Exception):
    """Base class for all luenid errors."""


class NotObservable(LuenidError):
    """The (A, C) pair is numerically rank deficient; no canonical form exists."""


class SingularShift(LuenidError):
    """A filter eigenvalue coincides with a plant eigenvalue; the shifted solve is singular."""


class SpectrumOverlap(LuenidError):
    """Observer eigenvalues come too close to the plant spectrum over the declared parameter box."""


class Unstable(LuenidError):
    """A simulated state norm exceeded the divergence guard; integration halted."""


class DimensionMismatch(LuenidError):
    """An input vector or matrix has an incompatible shape."""


class InvalidQuadrature(LuenidError):
    """The quadrature step does not produce a valid subdivision of the integration interval."""


class BoxTooLarge(LuenidError):
    """A grid search over the requested box exceeds the configured evaluation budget."""


class DegenerateReference(LuenidError):
    """The reference system has vanishing Markov parameters; the relative error is undefined."""


class DegenerateWindow(LuenidError):
    """The decay-fit window contains non-positive values; log-slope fitting is undefined."""


class ConfigError(LuenidError):
    """An experiment configuration file is missing, malformed, or inconsistent."""
