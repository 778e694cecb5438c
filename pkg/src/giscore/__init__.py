"""giscore: genetic-interaction scoring with survival-ratio and multiplicative measures."""

__version__ = "0.1.0"

from .measures import (
    InteractionScores,
    Measure,
    PositiveType,
    QuadrantClass,
    Sign,
    Thresholds,
    j_score,
    m_score,
)
from .probmodel import ObservableTable, TwoFactorEffectModel

__all__ = [
    "InteractionScores",
    "Measure",
    "ObservableTable",
    "PositiveType",
    "QuadrantClass",
    "Sign",
    "Thresholds",
    "TwoFactorEffectModel",
    "j_score",
    "m_score",
    "__version__",
]
