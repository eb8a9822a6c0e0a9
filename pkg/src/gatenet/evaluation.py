"""Cross-validation, error metrics, the PCA-regression comparator and the
simulation-study driver."""

import csv
import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import StructuralError, TrainingError
from .regate import ReGATE
from .synth import simulate_corpus, template_distance
from .validation import check_edge_counts, check_traits

logger = logging.getLogger(__name__)


def kfold_split(n, k=5, seed=0):
    """Fold label per sample: seeded shuffle, then round-robin assignment."""
    n, k = int(n), int(k)
    if k < 2 or k > n:
        raise StructuralError(f"need 2 <= k <= n, got k={k}, n={n}")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=np.int64)
    folds[order] = np.arange(n) % k
    return folds


def mse(pred, actual):
    pred, actual = _paired(pred, actual)
    return float(np.mean((pred - actual) ** 2))


def pearson(pred, actual):
    pred, actual = _paired(pred, actual)
    if pred.size < 2 or np.std(pred) == 0 or np.std(actual) == 0:
        raise StructuralError("correlation is undefined for constant input")
    return float(np.corrcoef(pred, actual)[0, 1])


def _paired(pred, actual):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    actual = np.asarray(actual, dtype=np.float64).ravel()
    if pred.size == 0 or pred.shape != actual.shape:
        raise StructuralError("predictions and targets need equal nonzero length")
    return pred, actual


class PCARegression(RegressorMixin, BaseEstimator):
    """Ordinary least squares of ``y`` on principal-component scores.

    Parameters
    ----------
    n_components : int, default=50
        Components kept; zero gives an intercept-only model. Components with
        (numerically) zero variance are dropped with a warning.
    """

    def __init__(self, n_components=50):
        self.n_components = n_components

    def fit(self, X, y):
        X, _ = check_edge_counts(X)
        y = check_traits(y, X.shape[0])
        n, d = X.shape
        k = int(self.n_components)
        if k < 0 or k > min(n - 1, d):
            raise StructuralError(
                f"n_components={k} must lie in [0, min(n-1, D)={min(n - 1, d)}]")
        self.mean_ = X.mean(axis=0)
        _, s, vt = np.linalg.svd(X - self.mean_, full_matrices=False)
        tol = s[0] * max(n, d) * np.finfo(float).eps if s.size else 0.0
        rank = int(np.sum(s > tol))
        if k > rank:
            warnings.warn(f"data has rank {rank}; dropping {k - rank} trailing components")
            k = rank
        self.components_ = vt[:k]
        scores = self._design(X)
        self.coef_, *_ = np.linalg.lstsq(scores, y, rcond=None)
        return self

    def _design(self, X):
        scores = (X - self.mean_) @ self.components_.T
        return np.hstack([np.ones((X.shape[0], 1)), scores])

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X, _ = check_edge_counts(X)
        return self._design(X) @ self.coef_


class MeanPredictor(RegressorMixin, BaseEstimator):
    """Predicts the training mean of ``y``."""

    def fit(self, X, y):
        self.mean_ = float(np.mean(y))
        return self

    def predict(self, X):
        return np.full(len(X), self.mean_)


def pca_linear_baseline(train_X, train_y, test_X, n_components=50):
    return PCARegression(n_components).fit(train_X, train_y).predict(test_X)


# -- simulation study ----------------------------------------------------------

METHODS = ("reGATE", "S-reGATE", "LR-PCA", "mean")


@dataclass
class StudyConfig:
    """Settings for :func:`run_simulation_study`.

    ``model`` holds keyword arguments for :class:`~gatenet.regate.ReGATE`;
    S-reGATE reuses them with ``decoder="dense"``.
    """

    per_family: int = 100
    n_nodes: int = 68
    trait_case: int = 1
    corpus_seed: int = 0
    n_folds: int = 5
    fold_seed: int = 0
    edge_freq_threshold: float = 0.2
    pca_components: int = 50
    methods: tuple = METHODS
    model: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    """Per-fold and aggregate results of a cross-validated comparison."""

    trait_case: int
    rows: list = field(default_factory=list)
    predictions: dict = field(default_factory=dict)
    actual: np.ndarray = None
    folds: np.ndarray = None

    def aggregate(self, method):
        """Pooled out-of-fold MSE and correlation, and total seconds."""
        pred = self.predictions[method]
        corr = pearson(pred, self.actual) if np.std(pred) > 0 else float("nan")
        seconds = sum(r["seconds"] for r in self.rows if r["method"] == method)
        return {"mse": mse(pred, self.actual), "pearson": corr, "seconds": seconds}

    def summary(self):
        return {m: self.aggregate(m) for m in self.predictions}

    def write_csv(self, path):
        """Rows ``(method, trait_case, fold, mse, pearson, seconds)`` plus one
        ``fold == "all"`` aggregate row per method."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "trait_case", "fold", "mse", "pearson", "seconds"])
            for r in self.rows:
                writer.writerow([r["method"], self.trait_case, r["fold"],
                                 _fmt(r["mse"]), _fmt(r["pearson"]), _fmt(r["seconds"])])
            for method in self.predictions:
                agg = self.aggregate(method)
                writer.writerow([method, self.trait_case, "all", _fmt(agg["mse"]),
                                 _fmt(agg["pearson"]), _fmt(agg["seconds"])])


def _fmt(x):
    return repr(float(x))


def _make_method(name, config):
    if name == "reGATE":
        return ReGATE(**config.model)
    if name == "S-reGATE":
        return ReGATE(**{**config.model, "decoder": "dense"})
    if name == "LR-PCA":
        return PCARegression(config.pca_components)
    if name == "mean":
        return MeanPredictor()
    raise StructuralError(f"unknown method {name!r}")


def cross_validate(graphs, y, config, distance=None, timer=time.perf_counter):
    """Out-of-fold predictions of every method in ``config.methods``."""
    graphs = np.asarray(graphs)
    y = np.asarray(y, dtype=np.float64)
    folds = kfold_split(len(y), config.n_folds, config.fold_seed)
    if distance is None:
        distance = template_distance(graphs, config.edge_freq_threshold)
    report = EvalReport(config.trait_case, actual=y, folds=folds)
    for method in config.methods:
        pred = np.empty_like(y)
        for fold in range(config.n_folds):
            test = folds == fold
            est = _make_method(method, config)
            start = timer()
            try:
                if isinstance(est, ReGATE):
                    est.fit(graphs[~test], y[~test], distance=distance)
                else:
                    est.fit(graphs[~test], y[~test])
            except TrainingError as exc:
                raise TrainingError(f"{method}, fold {fold}: {exc}", exc.epoch) from exc
            pred[test] = est.predict(graphs[test])
            seconds = timer() - start
            fold_pred, fold_y = pred[test], y[test]
            corr = (pearson(fold_pred, fold_y) if np.std(fold_pred) > 0
                    else float("nan"))
            report.rows.append({"method": method, "fold": fold,
                                "mse": mse(fold_pred, fold_y), "pearson": corr,
                                "seconds": seconds})
            logger.info("%s fold %d mse %.5f", method, fold, report.rows[-1]["mse"])
        report.predictions[method] = pred
    return report


def run_simulation_study(config=None, timer=time.perf_counter):
    """Simulate the four-family corpus and cross-validate every method."""
    config = config or StudyConfig()
    corpus = simulate_corpus(per_family=config.per_family, n_nodes=config.n_nodes,
                             seed=config.corpus_seed, case=config.trait_case)
    return cross_validate(corpus.graphs, corpus.traits, config, timer=timer)
