"""Exception types raised across the package."""


class ShmbsError(Exception):
    """Base class for all package errors."""


class ConfigError(ShmbsError, ValueError):
    pass


class MissingColumn(ShmbsError, KeyError):
    pass


class UnparseableDate(ShmbsError, ValueError):
    pass


class NonFiniteValue(ShmbsError, ValueError):
    pass


class CoverageGap(ShmbsError, ValueError):
    pass


class ZeroVariance(ShmbsError, ValueError):
    pass


class DimensionMismatch(ShmbsError, ValueError):
    pass


class SingularInnovationCovariance(ShmbsError, ArithmeticError):
    pass


class NonConvergence(ShmbsError, RuntimeError):
    pass


class DegenerateSeries(ShmbsError, ValueError):
    pass


class MisalignedIndex(ShmbsError, ValueError):
    pass


class SingularSigmaEps(ShmbsError, ArithmeticError):
    pass


class RankDeficientDesign(ShmbsError, ArithmeticError):
    pass


class FlatSpectrum(ShmbsError, ValueError):
    pass


class NonStationaryConfig(ShmbsError, ValueError):
    pass


class InsufficientHistory(ShmbsError, ValueError):
    pass


class LengthMismatch(ShmbsError, ValueError):
    pass


class McmcError(ShmbsError, RuntimeError):
    """A sampler block failed; ``iteration`` records where."""

    def __init__(self, iteration, cause):
        super().__init__(f"MCMC failed at iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause


class BacktestError(ShmbsError, RuntimeError):
    def __init__(self, window, cause):
        super().__init__(f"backtest failed in window {window}: {cause}")
        self.window = window
        self.cause = cause
