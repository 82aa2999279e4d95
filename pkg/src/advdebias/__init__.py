"""Fairness-constrained training by adversarial debiasing."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0+unknown"

from .fairness import FairnessReport, fairness_report
from .grad_engine import AdamState, DebiasGradients, ParamVector, ScheduleSpec, compose_debias_direction
from .models import AnalogyPredictor, EmbeddingAdversary, LogisticPredictor, OddsAdversary, ParityAdversary
from .trainer import FairnessMode, TrainConfig, evaluate, fit

__all__ = [
    "__version__", "FairnessReport", "fairness_report", "AdamState", "DebiasGradients",
    "ParamVector", "ScheduleSpec", "compose_debias_direction", "AnalogyPredictor",
    "EmbeddingAdversary", "LogisticPredictor", "OddsAdversary", "ParityAdversary",
    "FairnessMode", "TrainConfig", "evaluate", "fit",
]
