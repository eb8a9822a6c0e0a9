import math

import numpy as np
import pytest

from gatenet.exceptions import StructuralError
from gatenet.inference import (conditional_band, conditional_mean_network,
                               mean_difference_topk, posterior_predictive_check,
                               write_band_csv, write_edge_delta_csv)
from gatenet.regate import ReGATE

from factories import random_counts, ring_distance


@pytest.fixture(scope="module")
def model():
    counts = random_counts(24, 8, seed=0, lam=1.0)
    y = counts[:, :6].sum(axis=1)
    y = (y - y.mean()) / y.std(ddof=1)
    est = ReGATE(n_components=3, n_factors=2, n_neighbors=2, hidden=8, batch_size=8,
                 n_epochs=10, learning_rate=0.01, random_state=0)
    return est.fit(counts, y, distance=ring_distance(8))


def _constant_rate(model, lam, beta=None):
    """Copy of ``model`` whose decoder emits ``lam`` on every edge."""
    clone = ReGATE(**model.get_params())
    for attr in ("arch_", "n_nodes_", "n_features_in_", "distance_"):
        setattr(clone, attr, getattr(model, attr))
    params = {k: v.copy() for k, v in model.params_.items()}
    for k in params:
        if k.startswith("dec_"):
            params[k][:] = 0.0
    params["alpha_raw"][:] = -60.0
    params["gamma"][:] = math.log(lam)
    if beta is not None:
        params["beta"][:] = beta
    clone.params_ = params
    return clone


def test_ppc_feedback_is_identical(model):
    generated = model.sample(30, random_state=4)
    pairs = posterior_predictive_check(model, generated, n_draws=30, random_state=4)
    for obs, gen in pairs.values():
        np.testing.assert_array_equal(obs.samples, gen.samples)
        assert obs.source == "observed" and gen.source == "generated"


def test_ppc_empty_generator(model):
    empty = _constant_rate(model, 1e-13)
    pairs = posterior_predictive_check(empty, model.sample(5, random_state=0), n_draws=20,
                                       measures=("density",))
    assert not pairs["density"][1].samples.any()
    with pytest.raises(StructuralError):
        posterior_predictive_check(empty, model.sample(5), n_draws=20,
                                   measures=("avg_path_length",))


def test_ppc_density_converges_to_bernoulli(model):
    lam = 0.3
    pairs = posterior_predictive_check(_constant_rate(model, lam), model.sample(2),
                                       n_draws=10_000, measures=("density",))
    gen = pairs["density"][1].samples
    p = 1 - math.exp(-lam)
    se = math.sqrt(p * (1 - p) / (gen.size * 28))
    assert abs(gen.mean() - p) < 3 * se


def test_band_single_draw_collapses(model):
    bands = conditional_band(model, [-1.0, 0.5], n_per_y=1, random_state=1,
                             measures=("density",))
    b = bands["density"]
    np.testing.assert_array_equal(b.lower, b.mean)
    np.testing.assert_array_equal(b.upper, b.mean)
    assert b.draws_per_y == 1


def test_band_order_and_csv(model, tmp_path):
    bands = conditional_band(model, np.linspace(-1.5, 2, 4), n_per_y=40, random_state=2)
    for b in bands.values():
        ok = ~b.flagged
        assert np.all(b.lower[ok] <= b.mean[ok]) and np.all(b.mean[ok] <= b.upper[ok])
    write_band_csv(bands, tmp_path / "band.csv")
    lines = (tmp_path / "band.csv").read_text().splitlines()
    assert lines[0] == "y,measure,mean,lower,upper,n_effective"
    assert len(lines) == 1 + 2 * 4


def test_band_flags_undefined_points(model):
    empty = _constant_rate(model, 1e-13)
    band = conditional_band(empty, [0.0], n_per_y=5, measures=("avg_path_length",))
    b = band["avg_path_length"]
    assert b.flagged.all() and np.isnan(b.mean).all()


def test_band_flat_without_regression(model):
    flat = _constant_rate(model, 1.0, beta=0.0)
    b = conditional_band(flat, [-2.0, 2.0], n_per_y=300, random_state=0,
                         measures=("density",))["density"]
    assert abs(b.mean[0] - b.mean[1]) < 0.01


def test_conditional_mean_network(model):
    one = conditional_mean_network(model, 0.5, n=1, random_state=0)
    assert set(np.unique(one)) <= {0.0, 1.0}
    many = conditional_mean_network(model, 0.5, n=200, random_state=0)
    assert many.min() >= 0 and many.max() <= 1
    np.testing.assert_array_equal(many, many.T)
    counts = conditional_mean_network(model, 0.5, n=50, binarize=False)
    assert counts.min() >= 0


def test_conditional_mean_network_without_regression_matches_prior(model):
    flat = _constant_rate(model, 0.7, beta=0.0)
    mean = conditional_mean_network(flat, 1.3, n=2000, random_state=3)
    iu = np.tril_indices(8, -1)
    p = 1 - math.exp(-0.7)
    assert abs(mean[iu].mean() - p) < 3 * math.sqrt(p * (1 - p) / (2000 * 28))


def test_topk_shared_streams(model, tmp_path):
    pos, neg = mean_difference_topk(model, 0.4, 0.4, n=50, k=5)
    assert len(pos) == len(neg) == 0
    pos, neg = mean_difference_topk(model, -1.0, 1.5, n=50, k=10)
    rpos, rneg = mean_difference_topk(model, 1.5, -1.0, n=50, k=10)
    np.testing.assert_array_equal(rneg.delta, -pos.delta)
    np.testing.assert_array_equal(rpos.delta, -neg.delta)
    np.testing.assert_array_equal(rneg.u, pos.u)
    for part in (pos, neg):
        assert np.all(part.u > part.v)
        assert np.all(np.diff(np.abs(part.delta)) <= 0)
    assert sorted(np.concatenate([pos.rank, neg.rank]).tolist()) == list(
        range(1, len(pos) + len(neg) + 1))
    write_edge_delta_csv(pos, neg, tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "u,v,delta,rank,sign"
    assert len(lines) == 1 + len(pos) + len(neg)


def test_topk_single_and_bounds(model):
    pos, neg = mean_difference_topk(model, -1.0, 1.5, n=50, k=1)
    assert len(pos) + len(neg) <= 1
    full_pos, full_neg = mean_difference_topk(model, -1.0, 1.5, n=50, k=28)
    best = np.concatenate([full_pos.delta, full_neg.delta])
    if len(pos) + len(neg):
        top = (pos if len(pos) else neg).delta[0]
        assert abs(top) == np.abs(best).max()
    with pytest.raises(StructuralError):
        mean_difference_topk(model, -1.0, 1.0, k=29)
