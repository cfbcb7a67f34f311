"""Marked Hawkes processes whose marks are updates to a growing network."""
from .dynet import DynamicNetwork, EventRecord, Mark, replay, summary_statistics
from .errors import HawkesNetError
from .estimate import FitOptions, FitResult, fit_mle, log_likelihood, replicate_experiment
from .kernel import GroundParams, compensator
from .markmodel import MarkModelSpec, NodeAux, log_prob_mark, sample_mark
from .process import ModelSpec, Realization, simulate

__version__ = "0.1.0"

__all__ = [
    "DynamicNetwork", "EventRecord", "Mark", "replay", "summary_statistics", "HawkesNetError",
    "FitOptions", "FitResult", "fit_mle", "log_likelihood", "replicate_experiment", "GroundParams",
    "compensator", "MarkModelSpec", "NodeAux", "log_prob_mark", "sample_mark", "ModelSpec",
    "Realization", "simulate",
]
