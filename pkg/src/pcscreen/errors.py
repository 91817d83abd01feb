"""Exception types shared across the package."""

from __future__ import annotations


class PcScreenError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(PcScreenError):
    """Inputs whose observation counts differ, or matrices of the wrong arity."""


class InputTooLarge(PcScreenError):
    """Guard against running the O(n^3)-materializing reference code on large n."""


class UnknownFeature(PcScreenError):
    """A feature index outside the 0..p-1 range of the ranking at hand."""


class MultivariateResponseUnsupported(PcScreenError):
    """Raised by the Pearson baseline, which handles univariate responses only."""


class DegenerateColumn(PcScreenError):
    """A column with zero variance where standardization is required."""


class SolverFailure(PcScreenError):
    """The h-vector solver found no feasible iterate within its budget."""


class InfeasibleH(PcScreenError):
    """An h vector whose implied joint covariance is not positive semidefinite."""


class InvalidAlpha(PcScreenError):
    """A target FDR level outside (0, 1]."""


class InvalidSplit(PcScreenError):
    """A sample split leaving fewer than two observations on either side."""


class UnknownModel(PcScreenError):
    """A simulation model identifier outside the supported set."""


class ParseError(PcScreenError):
    """A malformed input file (missing header, ragged row, empty file...)."""


class MissingColumn(ParseError):
    """A requested column name absent from the CSV header."""


class NonNumericCell(ParseError):
    """A CSV cell that does not parse as a finite number."""
