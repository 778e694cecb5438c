"""Exception hierarchy shared by all giscore modules.

Every failure mode a caller can recover from gets its own class; bare
ValueError/KeyError are reserved for plain contract violations (wrong
argument types, reference level passed where a non-reference one is
required, and similar programming errors).
"""


class GiscoreError(Exception):
    """Base class for all giscore-specific errors."""


class ModelValidationError(GiscoreError, ValueError):
    """A model or table violates its construction invariants."""


class LevelNotFoundError(GiscoreError, KeyError):
    """A factor level is not part of the model/table it was used with."""


class MissingCellError(GiscoreError):
    """An operation needs a survival cell the table does not carry."""


class MissingDistributionError(GiscoreError):
    """The operation needs a joint factor distribution and none is attached."""


class ZeroMassError(GiscoreError):
    """Conditioning on a level whose marginal probability is zero."""


class DegenerateDistributionError(GiscoreError):
    """The neutrality denominator vanished; the table/distribution is degenerate."""


class ZeroSurvivalError(GiscoreError):
    """A ratio or logarithm was requested on a zero survival cell."""


class NormalizationError(GiscoreError):
    """A probability vector that must sum to 1 does not."""


class InvalidFitnessError(GiscoreError, ValueError):
    """A fitness value is non-finite or negative."""


class EmptyDatasetError(GiscoreError):
    """An operation that needs at least one record received none."""


class SchemaError(GiscoreError):
    """The input file header does not expose the required columns."""


class InvalidIdentifierError(GiscoreError, ValueError):
    """A strain identifier is empty or unusable."""


class EmptyProfileError(GiscoreError):
    """The gene has no interaction partners; no profile can be built."""


class InsufficientOverlapError(GiscoreError):
    """Two profiles share fewer positions than correlation requires."""


class UndefinedCorrelationError(GiscoreError):
    """A profile restriction is constant; Pearson correlation is undefined."""


class ContainmentError(GiscoreError):
    """The selected gene set is not contained in the universe."""


class PerturbationError(GiscoreError):
    """A perturbation multiplier drives a survival probability out of (0, 1]."""
