"""Supervised auto-encoder: trait regression on the latent code and
trait-conditional graph generation."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import StructuralError
from .gate import GATE
from .validation import check_traits


@dataclass(frozen=True)
class ConditionalCodeLaw:
    """Gaussian law of the latent code given a trait value."""

    mean: np.ndarray
    covariance: np.ndarray
    sqrt_covariance: np.ndarray


def conditional_code_posterior(y, beta, intercept, noise_var):
    """Closed-form ``p(z | y)`` under ``z ~ N(0, I)``, ``y | z ~ N(z'beta + b, s2)``.

    Uses ``(I + beta beta' / s2)^-1 = I - beta beta' / (s2 + beta'beta)``.
    The symmetric square root scales the ``beta`` direction by
    ``sqrt(s2 / (s2 + beta'beta))`` and leaves its complement alone.
    """
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if not noise_var > 0:
        raise StructuralError("noise variance must be positive")
    k = beta.size
    bb = float(beta @ beta)
    outer = np.outer(beta, beta)
    cov = np.eye(k) - outer / (noise_var + bb)
    mean = cov @ beta * (float(y) - intercept) / noise_var
    if bb > 0:
        shrink = np.sqrt(noise_var / (noise_var + bb))
        root = np.eye(k) + (shrink - 1.0) * outer / bb
    else:
        root = np.eye(k)
    return ConditionalCodeLaw(mean, cov, root)


class ReGATE(RegressorMixin, GATE):
    """GATE with a Gaussian regression head ``y | z ~ N(z'beta + b, sigma^2)``.

    Takes the same parameters as :class:`GATE` (``n_epochs`` defaults to
    200 here). Traits are expected on a standardized scale.

    Attributes
    ----------
    coef_ : ndarray of shape (K,)
        ``beta``.
    intercept_ : float
    noise_var_ : float
        Learned trait noise variance ``sigma^2``.
    """

    _supervised = True

    def __init__(self, n_components=45, n_factors=5, n_layers=2, n_neighbors=16,
                 hidden=400, mc_samples=1, learning_rate=0.001, batch_size=128,
                 n_epochs=200, activations=("sigmoid", "sigmoid"),
                 decoder="latent_space", dense_hidden=400,
                 positive_gcn_weights=False, edge_freq_threshold=0.5,
                 random_state=0):
        super().__init__(
            n_components=n_components, n_factors=n_factors, n_layers=n_layers,
            n_neighbors=n_neighbors, hidden=hidden, mc_samples=mc_samples,
            learning_rate=learning_rate, batch_size=batch_size,
            n_epochs=n_epochs, activations=activations, decoder=decoder,
            dense_hidden=dense_hidden, positive_gcn_weights=positive_gcn_weights,
            edge_freq_threshold=edge_freq_threshold, random_state=random_state)

    def fit(self, X, y, distance=None):
        counts = self._setup(X, distance)
        y = check_traits(y, counts.shape[0])
        self._train(counts, y)
        return self

    @property
    def coef_(self):
        return self.params_["beta"].ravel()

    @property
    def intercept_(self):
        return float(self.params_["intercept"][0, 0])

    @property
    def noise_var_(self):
        return float(np.exp(self.params_["log_noise_var"][0, 0]))

    def predict(self, X):
        """``mu(A)' beta + b`` from the posterior mean code (no sampling)."""
        return self.transform(X) @ self.coef_ + self.intercept_

    def conditional_code_posterior(self, y):
        check_is_fitted(self, "params_")
        return conditional_code_posterior(y, self.coef_, self.intercept_,
                                          self.noise_var_)

    def conditional_codes(self, y, noise):
        """Codes ``mu_z(y) + S eps`` for standard-normal ``noise`` ``(n, K)``."""
        law = self.conditional_code_posterior(y)
        return law.mean + np.atleast_2d(noise) @ law.sqrt_covariance

    def conditional_rates(self, y, noise):
        return self.decode_rates(self.conditional_codes(y, noise))

    def conditional_sample(self, y, n_samples=1, random_state=None):
        """Draw graphs from ``p(A | y)`` via ``z ~ p(z | y)``."""
        check_is_fitted(self, "params_")
        rng = np.random.default_rng(random_state)
        noise = rng.standard_normal((int(n_samples), self.arch_.n_components))
        return self._draw_graphs(self.conditional_rates(y, noise), rng)
