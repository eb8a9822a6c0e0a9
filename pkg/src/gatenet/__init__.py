"""Graph auto-encoders for populations of networks.

:class:`GATE` learns a low-dimensional code for each graph under a Poisson
latent-space decoder; :class:`ReGATE` adds a Gaussian regression of a scalar
trait on the code and supports trait-conditional graph generation.
"""

from .evaluation import PCARegression, StudyConfig, cross_validate, run_simulation_study
from .exceptions import (ConfigError, GateError, ModelFileError, NumericalError,
                         StructuralError, TrainingError)
from .gate import GATE
from .graphs import SummaryStats, devectorize, knn_from_distance, summaries, vectorize
from .persistence import load_model, save_model
from .regate import ReGATE
from .synth import simulate_corpus, template_distance

__version__ = "0.1.0"

__all__ = [
    "GATE", "ReGATE", "PCARegression", "StudyConfig", "SummaryStats",
    "cross_validate", "devectorize", "knn_from_distance", "load_model",
    "run_simulation_study", "save_model", "simulate_corpus", "summaries",
    "template_distance", "vectorize", "ConfigError", "GateError", "ModelFileError",
    "NumericalError", "StructuralError", "TrainingError",
]
