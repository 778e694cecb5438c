"""Fitness-based interaction scores and their classification.

Two scores per gene pair, both taking wild-type fitness as 1:

* ``m_score``: the multiplicative-on-rate score, double-mutant fitness minus
  the product of the single-mutant fitnesses.
* ``j_score``: the additive-on-rate score ``(1 + dmf) - (smf1 + smf2)``. Under
  the exponential growth bridge (:func:`survival_from_rate` with t = 1) it is
  exactly the log of the four-cell survival ratio, so its null value is 0.

Classification applies a magnitude threshold per measure plus a shared
p-value cutoff, yielding the four quadrant classes (interaction called by
both measures, by one only, or by neither). Positive interactions split
further into suppressor (double mutant beats the sicker single mutant) and
masking types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple, Sequence

from .errors import EmptyDatasetError, InvalidFitnessError, ModelValidationError

if TYPE_CHECKING:
    from .netanalysis import ScoredPair


class Measure(str, Enum):
    M = "M"
    J = "J"


class QuadrantClass(str, Enum):
    """Interaction call by both measures, J only, M only, or neither."""

    MJ = "MJ"
    MBAR_J = "MbarJ"
    M_JBAR = "MJbar"
    MBAR_JBAR = "MbarJbar"


class Sign(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NONE = "none"


class PositiveType(str, Enum):
    MASKING = "masking"
    SUPPRESSOR = "suppressor"
    NOT_APPLICABLE = "notApplicable"


class InteractionScores(NamedTuple):
    m: float
    log_j: float


class RateSurvival(NamedTuple):
    event: float
    survival: float


@dataclass(frozen=True)
class Thresholds:
    """Interaction-call thresholds; comparisons are strict (>, <)."""

    m_thresh: float = 0.08
    j_thresh: float = 0.0886
    p_max: float = 0.05

    def __post_init__(self) -> None:
        if not (self.m_thresh > 0.0 and self.j_thresh > 0.0):
            raise ModelValidationError("magnitude thresholds must be positive")
        if not (0.0 < self.p_max <= 1.0):
            raise ModelValidationError(f"p_max = {self.p_max}, must be in (0, 1]")


def _check_fitness(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidFitnessError(f"fitness {v!r} is not finite")
        if v < 0.0:
            raise InvalidFitnessError(f"fitness {v!r} is negative")


def m_score(smf_query: float, smf_array: float, dmf: float) -> float:
    """Multiplicative-on-rate score: dmf - smf_query * smf_array."""
    _check_fitness(smf_query, smf_array, dmf)
    return dmf - smf_query * smf_array


def j_score(smf_query: float, smf_array: float, dmf: float) -> float:
    """Additive-on-rate score: (1 + dmf) - (smf_query + smf_array)."""
    _check_fitness(smf_query, smf_array, dmf)
    return (1.0 + dmf) - (smf_query + smf_array)


def survival_from_rate(rate: float, t: float) -> RateSurvival:
    """Event and survival probabilities of a rate process over a lapse t.

    Event probability 1 - exp(-rate * t); survival its complement.
    """
    if rate < 0.0 or not math.isfinite(rate):
        raise ValueError(f"rate must be finite and >= 0, got {rate!r}")
    if t <= 0.0 or not math.isfinite(t):
        raise ValueError(f"t must be finite and > 0, got {t!r}")
    survival = math.exp(-rate * t)
    return RateSurvival(event=1.0 - survival, survival=survival)


def is_interacting(value: float, thresh: float, p_value: float, p_max: float) -> bool:
    """Strict magnitude threshold plus strict p-value cutoff."""
    return abs(value) > thresh and p_value < p_max


def classify_quadrant(scores: InteractionScores, p_value: float, th: Thresholds) -> QuadrantClass:
    """Quadrant class from the two per-measure interaction calls."""
    m_hit = is_interacting(scores.m, th.m_thresh, p_value, th.p_max)
    j_hit = is_interacting(scores.log_j, th.j_thresh, p_value, th.p_max)
    if m_hit and j_hit:
        return QuadrantClass.MJ
    if j_hit:
        return QuadrantClass.MBAR_J
    if m_hit:
        return QuadrantClass.M_JBAR
    return QuadrantClass.MBAR_JBAR


def positive_type(f01: float, f10: float, f11: float) -> PositiveType:
    """Suppressor iff the double mutant strictly beats the sicker single mutant.

    Only meaningful for pairs already classified positive under the measure
    being typed; ties and everything else are masking.
    """
    if f11 > min(f01, f10):
        return PositiveType.SUPPRESSOR
    return PositiveType.MASKING


@dataclass(frozen=True)
class CalibrationResult:
    """Smallest threshold that caps the J call count at the M call count.

    ``exact`` reports whether the counts came out equal; ``tie`` marks the
    case where equal |log J| values at the boundary forced the J count
    below the M count.
    """

    tau: float
    m_count: int
    j_count: int
    n_significant: int

    @property
    def exact(self) -> bool:
        return self.j_count == self.m_count

    @property
    def tie(self) -> bool:
        return self.j_count < self.m_count and self.n_significant > self.m_count


def calibrate_j_threshold(records: Sequence["ScoredPair"], th: Thresholds) -> CalibrationResult:
    """Pick the smallest tau with #{|log J| > tau} <= #{|M| > m_thresh}.

    Both counts run over the p-significant records only. With the counts
    sorted descending, tau is the (m_count + 1)-th largest |log J| (0 when
    fewer significant records exist than M calls); ties at the boundary
    resolve conservatively, leaving the J count below the M count.
    """
    if not records:
        raise EmptyDatasetError("cannot calibrate on an empty record set")
    sig = [r for r in records if r.p_value < th.p_max]
    m_count = sum(1 for r in sig if abs(r.scores.m) > th.m_thresh)
    j_abs = sorted((abs(r.scores.log_j) for r in sig), reverse=True)
    if m_count >= len(j_abs):
        tau = 0.0
    else:
        tau = j_abs[m_count]
    j_count = sum(1 for v in j_abs if v > tau)
    return CalibrationResult(tau=tau, m_count=m_count, j_count=j_count, n_significant=len(j_abs))
