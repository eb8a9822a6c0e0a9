"""Run configuration: nested YAML sections with documented defaults.

Every key has a default; unknown sections or keys raise
:class:`~gatenet.exceptions.ConfigError`. The ``GATENET_CONFIG`` environment
variable names a config file used when none is given on the command line.

Example::

    model:
      n_components: 45
      n_neighbors: 16
    optim:
      n_epochs: 200
"""

import dataclasses
import os
from dataclasses import dataclass, field

import yaml

from .exceptions import ConfigError

__all__ = ["RunConfig", "DataConfig", "ModelConfig", "OptimConfig",
           "InferenceConfig", "EvalConfig", "load_config", "ENV_VAR"]

ENV_VAR = "GATENET_CONFIG"


@dataclass
class DataConfig:
    """Where graphs come from.

    corpus : directory written by ``simulate`` (None simulates in memory)
    distance : CSV distance matrix (None derives a template from the graphs)
    """

    corpus: str = None
    distance: str = None
    per_family: int = 100
    n_nodes: int = 68
    seed: int = 0
    trait_case: int = 1
    n_ones: int = 17
    noise_sd: float = 1.0
    edge_freq_threshold: float = 0.2


@dataclass
class ModelConfig:
    """Architecture; defaults follow the 68-node simulation design."""

    n_components: int = 45
    n_factors: int = 5
    n_layers: int = 2
    n_neighbors: int = 16
    hidden: int = 400
    mc_samples: int = 1
    decoder: str = "latent_space"
    dense_hidden: int = 400
    activations: list = field(default_factory=lambda: ["sigmoid", "sigmoid"])
    positive_gcn_weights: bool = False


@dataclass
class OptimConfig:
    """Adam settings. ``n_epochs`` of None means 1000 for the unsupervised
    model and 200 for the supervised one."""

    learning_rate: float = 0.001
    batch_size: int = 128
    n_epochs: int = None
    random_state: int = 0


@dataclass
class InferenceConfig:
    """Draw counts and grids. ``y_low``/``y_high`` of None use the 10% and
    90% quantiles of the training traits."""

    n_draws: int = 1000
    y_grid: list = field(default_factory=lambda: [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0])
    n_per_y: int = 500
    quantiles: list = field(default_factory=lambda: [0.025, 0.975])
    n_diff: int = 100
    top_k: int = 50
    y_low: float = None
    y_high: float = None
    binarize: bool = True


@dataclass
class EvalConfig:
    n_folds: int = 5
    fold_seed: int = 0
    pca_components: int = 50
    methods: list = field(default_factory=lambda: ["reGATE", "S-reGATE", "LR-PCA", "mean"])


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    output: str = "out"

    @classmethod
    def from_dict(cls, raw):
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(raw) - set(known)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        kwargs = {}
        for name, value in raw.items():
            if name == "output":
                kwargs[name] = str(value)
                continue
            section = known[name].default_factory
            kwargs[name] = _section(section, name, value)
        return cls(**kwargs)

    def to_dict(self):
        return dataclasses.asdict(self)

    def estimator_params(self, supervised):
        m, o = self.model, self.optim
        epochs = o.n_epochs if o.n_epochs is not None else (200 if supervised else 1000)
        return {
            "n_components": m.n_components, "n_factors": m.n_factors,
            "n_layers": m.n_layers, "n_neighbors": m.n_neighbors, "hidden": m.hidden,
            "mc_samples": m.mc_samples, "decoder": m.decoder,
            "dense_hidden": m.dense_hidden, "activations": tuple(m.activations),
            "positive_gcn_weights": m.positive_gcn_weights,
            "edge_freq_threshold": self.data.edge_freq_threshold,
            "learning_rate": o.learning_rate, "batch_size": o.batch_size,
            "n_epochs": epochs, "random_state": o.random_state,
        }


def _section(cls, name, value):
    if value is None:
        return cls()
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(value) - set(fields)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    out = cls(**value)
    for key in value:
        default = getattr(cls(), key)
        got = getattr(out, key)
        if default is not None and got is not None and not _compatible(default, got):
            raise ConfigError(f"{name}.{key}: expected {type(default).__name__}, "
                              f"got {type(got).__name__}")
    return out


def _compatible(default, value):
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list)
    return isinstance(value, type(default))


def load_config(path=None):
    """Parse a YAML config; with no path, use ``$GATENET_CONFIG`` or defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return RunConfig()
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(raw)
