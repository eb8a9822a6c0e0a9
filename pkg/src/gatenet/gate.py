"""The unsupervised graph auto-encoder as a scikit-learn style transformer."""

import logging
import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import autodiff as ad
from .core import (Architecture, decode_log_rates, elbo_terms, encode,
                   init_params, supervised_elbo_loss, elbo_loss)
from .exceptions import NumericalError, StructuralError, TrainingError
from .graphs import check_distance, devectorize, knn_from_distance
from .optim import Adam
from .synth import template_distance
from .validation import check_edge_counts

logger = logging.getLogger(__name__)


class GATE(TransformerMixin, BaseEstimator):
    """Variational graph auto-encoder with a Poisson latent-space decoder.

    Each edge count is Poisson with log-rate ``gamma_l + sum_r alpha_r
    X_ur(z) X_vr(z)``; the node factors ``X_r(z)`` come from a graph
    convolution whose deeper layers only mix a node with its k nearest
    neighbors under a distance matrix.

    Parameters
    ----------
    n_components : int, default=45
        Latent dimension ``K``.
    n_factors : int, default=5
        Node-embedding dimension ``R``.
    n_layers : int, default=2
        GCN depth ``M``.
    n_neighbors : int or sequence of int, default=16
        ``k`` for the k-NN masks, one value or one per factor.
    hidden : int, default=400
        Encoder hidden width.
    mc_samples : int, default=1
        Monte-Carlo draws ``L`` per example.
    learning_rate : float, default=0.001
    batch_size : int, default=128
    n_epochs : int, default=1000
    activations : tuple of str, default=("sigmoid", "sigmoid")
        One activation per GCN layer.
    decoder : {"latent_space", "dense"}, default="latent_space"
        ``"dense"`` maps ``z`` to log-rates with an unstructured two-layer
        network (the ablation without node embeddings).
    dense_hidden : int, default=400
    positive_gcn_weights : bool, default=False
        Pass masked GCN weights through softplus so they stay positive.
    edge_freq_threshold : float, default=0.5
        Used only when ``fit`` builds its own distance matrix.
    random_state : int, default=0

    Attributes
    ----------
    params_ : dict of str -> ndarray
    arch_ : Architecture
    neighborhoods_ : list of NeighborhoodMap
    distance_ : ndarray of shape (V, V)
    loss_curve_ : list of float
        Mean per-example loss of every epoch.
    """

    def __init__(self, n_components=45, n_factors=5, n_layers=2, n_neighbors=16,
                 hidden=400, mc_samples=1, learning_rate=0.001, batch_size=128,
                 n_epochs=1000, activations=("sigmoid", "sigmoid"),
                 decoder="latent_space", dense_hidden=400,
                 positive_gcn_weights=False, edge_freq_threshold=0.5,
                 random_state=0):
        self.n_components = n_components
        self.n_factors = n_factors
        self.n_layers = n_layers
        self.n_neighbors = n_neighbors
        self.hidden = hidden
        self.mc_samples = mc_samples
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.activations = activations
        self.decoder = decoder
        self.dense_hidden = dense_hidden
        self.positive_gcn_weights = positive_gcn_weights
        self.edge_freq_threshold = edge_freq_threshold
        self.random_state = random_state

    _supervised = False

    def _build_arch(self, n_nodes, distance):
        ks = self.n_neighbors
        if np.ndim(ks) == 0:
            ks = [int(ks)] * self.n_factors
        ks = [int(k) for k in ks]
        if len(ks) != self.n_factors:
            raise StructuralError("n_neighbors needs one value per factor")
        self.neighborhoods_ = []
        masks = ()
        if self.decoder == "latent_space" and self.n_layers > 1:
            self.neighborhoods_ = [knn_from_distance(distance, k) for k in ks]
            masks = tuple(nb.mask() for nb in self.neighborhoods_)
        return Architecture(
            n_nodes=n_nodes, n_components=int(self.n_components),
            n_factors=int(self.n_factors), n_layers=int(self.n_layers),
            hidden=int(self.hidden), activations=tuple(self.activations),
            decoder=self.decoder, dense_hidden=int(self.dense_hidden),
            positive_gcn_weights=bool(self.positive_gcn_weights), masks=masks)

    def _setup(self, X, distance):
        counts, n_nodes = check_edge_counts(X)
        if distance is None:
            graphs = [devectorize(c, n_nodes) for c in counts]
            distance = template_distance(graphs, self.edge_freq_threshold)
        distance = check_distance(distance)
        if distance.shape != (n_nodes, n_nodes):
            raise StructuralError("distance matrix does not match graph size")
        self.distance_ = distance
        self.n_nodes_ = n_nodes
        self.n_features_in_ = counts.shape[1]
        self.arch_ = self._build_arch(n_nodes, distance)
        return counts

    def fit(self, X, y=None, distance=None):
        """Train on graphs ``(n, V, V)`` or edge-count vectors ``(n, D)``.

        ``distance`` is the ``(V, V)`` matrix defining neighborhoods; when
        omitted it is derived from ``X`` with :func:`template_distance`.
        """
        counts = self._setup(X, distance)
        self._train(counts, None)
        return self

    def _train(self, counts, y):
        n = counts.shape[0]
        if n == 0:
            raise StructuralError("cannot fit on an empty dataset")
        rng = np.random.default_rng(self.random_state)
        arch = self.arch_
        params = init_params(arch, rng, counts.mean(axis=0),
                             supervised=y is not None)
        batch = int(self.batch_size)
        if batch > n:
            warnings.warn(f"batch_size={batch} exceeds n={n}; using n")
            batch = n
        opt = Adam(self.learning_rate)
        curve = []
        for epoch in range(int(self.n_epochs)):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                noise = rng.standard_normal((int(self.mc_samples), idx.size,
                                             arch.n_components))
                tape = ad.Tape()
                try:
                    tracked = {k: tape.variable(v) for k, v in params.items()}
                    if y is None:
                        loss = elbo_loss(counts[idx], tracked, arch, noise)
                    else:
                        loss = supervised_elbo_loss(counts[idx], y[idx], tracked,
                                                    arch, noise)
                    objective = ad.scale(loss, tape.constant(n / idx.size))
                    grads = tape.backward(objective)
                except NumericalError as exc:
                    tape.clear()
                    raise TrainingError(
                        f"training diverged in epoch {epoch}: {exc}", epoch) from exc
                total += loss.data[0, 0]
                opt.step(params, {k: grads[v] for k, v in tracked.items()})
                tape.clear()
            curve.append(total / n)
            logger.debug("epoch %d loss %.6f", epoch, curve[-1])
        self.params_ = params
        self.loss_curve_ = curve
        self.n_epochs_ = int(self.n_epochs)

    # -- inference ---------------------------------------------------------------

    def _counts(self, X):
        check_is_fitted(self, "params_")
        counts, n_nodes = check_edge_counts(X)
        if n_nodes != self.n_nodes_:
            raise StructuralError(f"model was fit on V={self.n_nodes_}, got V={n_nodes}")
        return counts

    def encode(self, X):
        """Posterior means and log-variances, each ``(n, K)``."""
        mean, logvar = encode(self._counts(X), self.params_)
        return mean.data, logvar.data

    def transform(self, X):
        """Posterior mean latent codes, ``(n, K)``."""
        return self.encode(X)[0]

    def decode_rates(self, Z):
        """Poisson rates ``(n, D)`` for latent codes ``Z``."""
        check_is_fitted(self, "params_")
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        return np.exp(decode_log_rates(Z, self.params_, self.arch_).data)

    def _draw_graphs(self, rates, rng):
        counts = rng.poisson(rates)
        return np.stack([devectorize(c, self.n_nodes_) for c in counts])

    def sample(self, n_samples=1, random_state=None):
        """Draw graphs from the prior predictive: ``z ~ N(0, I)``, Poisson counts."""
        check_is_fitted(self, "params_")
        rng = np.random.default_rng(random_state)
        z = rng.standard_normal((int(n_samples), self.arch_.n_components))
        return self._draw_graphs(self.decode_rates(z), rng)

    def elbo(self, X, n_draws=1, random_state=None):
        """Per-graph Monte-Carlo ELBO (higher is better)."""
        counts = self._counts(X)
        rng = np.random.default_rng(random_state)
        noise = rng.standard_normal((n_draws, counts.shape[0], self.arch_.n_components))
        recon, kl, _ = elbo_terms(counts, self.params_, self.arch_, noise)
        return (recon.data - kl.data).ravel()

    def score(self, X, y=None):
        """Mean ELBO per graph with a fixed noise seed."""
        return float(np.mean(self.elbo(X, random_state=0)))
