import json

import numpy as np
import pytest

from gatenet import optim
from gatenet.cli import main
from gatenet.config import ENV_VAR, RunConfig, load_config
from gatenet.exceptions import ConfigError
from gatenet.plotting import line_with_band, scatter, violin_pair

TINY = """\
data: {per_family: 3, n_nodes: 12, n_ones: 3}
model: {n_components: 3, n_factors: 2, n_neighbors: 3, hidden: 8, dense_hidden: 8}
optim: {n_epochs: 2, batch_size: 6}
inference: {n_draws: 10, n_per_y: 5, n_diff: 5, top_k: 3, y_grid: [0.0, 1.0]}
eval: {pca_components: 2, n_folds: 3, methods: [LR-PCA, mean]}
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(TINY)
    return path


@pytest.fixture
def trained(tmp_path, cfg):
    sim, reg = tmp_path / "sim", tmp_path / "reg"
    assert main(["simulate", "--config", str(cfg), "--out", str(sim)]) == 0
    assert main(["train", "--mode", "regate", "--config", str(cfg), "--corpus", str(sim),
                 "--out", str(reg)]) == 0
    return sim, reg


# -- config ---------------------------------------------------------------------

def test_config_defaults_and_overrides(cfg):
    default = RunConfig()
    assert default.model.n_components == 45 and default.optim.learning_rate == 0.001
    assert default.estimator_params(supervised=True)["n_epochs"] == 200
    assert default.estimator_params(supervised=False)["n_epochs"] == 1000
    loaded = load_config(cfg)
    assert loaded.data.n_nodes == 12 and loaded.optim.n_epochs == 2
    assert loaded.model.n_factors == 2 and loaded.model.n_layers == 2


@pytest.mark.parametrize("raw", [
    {"modle": {}},
    {"model": {"n_component": 3}},
    {"model": {"n_components": "three"}},
    {"optim": {"learning_rate": True}},
    {"model": [1, 2]},
])
def test_config_rejects(raw):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(raw)


def test_config_env_var(tmp_path, cfg, monkeypatch):
    monkeypatch.setenv(ENV_VAR, str(cfg))
    assert load_config().data.per_family == 3
    monkeypatch.setenv(ENV_VAR, str(tmp_path / "missing.yaml"))
    with pytest.raises(ConfigError):
        load_config()


def test_config_round_trip():
    cfg = RunConfig.from_dict({"model": {"n_components": 7}})
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


# -- exit codes -----------------------------------------------------------------

def test_exit_usage(tmp_path):
    assert main([]) == 2
    assert main(["bogus"]) == 2
    assert main(["generate", "--out", str(tmp_path)]) == 2  # --model is required


def test_exit_config(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: {nope: 1}\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 3
    bad.write_text("model: [unclosed\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 3


def test_exit_io(tmp_path, cfg):
    missing = tmp_path / "none.gate"
    assert main(["generate", "--config", str(cfg), "--model", str(missing),
                 "--out", str(tmp_path / "o")]) == 4
    corrupt = tmp_path / "corrupt.gate"
    corrupt.write_bytes(b"not a model")
    assert main(["generate", "--config", str(cfg), "--model", str(corrupt),
                 "--out", str(tmp_path / "o")]) == 4


def test_exit_numerical(tmp_path, cfg, monkeypatch):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(sim)]) == 0

    def poisoned(self, params, grads):
        for v in params.values():
            v[...] = np.nan

    monkeypatch.setattr(optim.Adam, "step", poisoned)
    assert main(["train", "--config", str(cfg), "--corpus", str(sim),
                 "--out", str(tmp_path / "t")]) == 5


def test_band_on_unsupervised_model_is_usage_error(tmp_path, cfg):
    sim, gate = tmp_path / "sim", tmp_path / "gate"
    assert main(["simulate", "--config", str(cfg), "--out", str(sim)]) == 0
    assert main(["train", "--config", str(cfg), "--corpus", str(sim), "--out", str(gate)]) == 0
    assert main(["band", "--config", str(cfg), "--model", str(gate / "model.gate"),
                 "--out", str(tmp_path / "b")]) == 2


# -- outputs --------------------------------------------------------------------

def test_train_outputs_and_manifest(trained):
    _, reg = trained
    manifest = json.loads((reg / "manifest.json").read_text())
    assert manifest["command"] == "train" and manifest["seed"] == 0
    assert manifest["config"]["optim"]["n_epochs"] == 2
    lines = (reg / "loss.csv").read_text().splitlines()
    assert lines[0].startswith("epoch") and len(lines) == 3
    assert (reg / "model.gate").stat().st_size > 0


def test_replay_reproduces_outputs(trained, tmp_path):
    _, reg = trained
    before = {p.name: p.read_bytes() for p in reg.iterdir() if p.name != "manifest.json"}
    for p in reg.iterdir():
        if p.name != "manifest.json":
            p.unlink()
    assert main(["--replay", str(reg / "manifest.json")]) == 0
    after = {p.name: p.read_bytes() for p in reg.iterdir() if p.name != "manifest.json"}
    assert after == before


def test_replay_missing_manifest(tmp_path):
    assert main(["--replay", str(tmp_path / "nope.json")]) == 4


def test_seed_changes_training(tmp_path, cfg, trained):
    sim, reg = trained
    other = tmp_path / "other"
    assert main(["train", "--mode", "regate", "--config", str(cfg), "--corpus", str(sim),
                 "--seed", "5", "--out", str(other)]) == 0
    assert (other / "model.gate").read_bytes() != (reg / "model.gate").read_bytes()


def test_generate_and_diff(tmp_path, cfg, trained):
    sim, reg = trained
    gen = tmp_path / "gen"
    assert main(["generate", "--config", str(cfg), "--model", str(reg / "model.gate"),
                 "--y", "1.0", "--n", "2", "--out", str(gen)]) == 0
    assert sorted(p.name for p in gen.glob("gen*.csv")) == ["gen0000.csv", "gen0001.csv"]
    diff = tmp_path / "diff"
    assert main(["diff", "--config", str(cfg), "--model", str(reg / "model.gate"),
                 "--y-low", "-1", "--y-high", "1", "--k", "3", "--out", str(diff)]) == 0
    header = (diff / "edge_delta.csv").read_text().splitlines()[0]
    assert header == "u,v,delta,rank,sign"


# -- plotting -------------------------------------------------------------------

def test_plots_are_deterministic(tmp_path):
    x = np.linspace(0, 1, 6)
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        scatter(x, x ** 2, d / "s.svg", labels=[0, 0, 1, 1, 2, 2], diagonal=True)
        line_with_band(x, x, x - 0.1, x + 0.1, d / "band")
        violin_pair(x, x + 1, d / "v.svg")
    for name in ("s.svg", "s.csv", "band.svg", "band.csv", "v.svg", "v.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "band.csv").read_text().splitlines()[0] == "y,mean,lower,upper"


def test_plot_empty_series(tmp_path):
    from gatenet.exceptions import StructuralError
    with pytest.raises(StructuralError):
        scatter([], [], tmp_path / "e.svg")
