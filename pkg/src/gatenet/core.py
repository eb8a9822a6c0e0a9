"""Building blocks of the graph auto-encoder: parameters, encoder, decoder, losses.

Everything here works on batches. Counts are ``(B, D)`` edge matrices with
``D = V(V-1)/2``; latent codes are ``(B, K)``. Functions accept either raw
arrays (evaluated eagerly, no gradients) or :class:`~gatenet.autodiff.Value`
objects recorded on a tape.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import autodiff as ad
from .exceptions import NumericalError, StructuralError
from .graphs import edge_index, n_edges

LOGVAR_BOUND = 20.0
LOG_RATE_MAX = 30.0
LOG_2PI = float(np.log(2.0 * np.pi))

DECODERS = ("latent_space", "dense")


@dataclass(frozen=True)
class Architecture:
    """Static shape information shared by initialization and the forward pass.

    ``masks`` holds one boolean ``(V, V)`` support per latent factor ``r``
    (diagonal plus k-NN); it is ignored by the dense decoder.
    """

    n_nodes: int
    n_components: int
    n_factors: int = 5
    n_layers: int = 2
    hidden: int = 400
    activations: tuple = ("sigmoid", "sigmoid")
    decoder: str = "latent_space"
    dense_hidden: int = 400
    positive_gcn_weights: bool = False
    masks: tuple = ()

    def __post_init__(self):
        if min(self.n_nodes - 1, self.n_components, self.n_factors,
               self.n_layers, self.hidden, self.dense_hidden) < 1:
            raise StructuralError("all architecture sizes must be positive")
        if self.decoder not in DECODERS:
            raise StructuralError(f"unknown decoder variant {self.decoder!r}")
        if len(self.activations) != self.n_layers:
            raise StructuralError(
                f"need {self.n_layers} activations, got {len(self.activations)}")
        for name in self.activations:
            if name not in ad.ACTIVATIONS:
                raise StructuralError(f"unknown activation {name!r}")
        if self.decoder == "latent_space" and self.n_layers > 1:
            if len(self.masks) != self.n_factors:
                raise StructuralError("need one mask per latent factor")
            for m in self.masks:
                if np.shape(m) != (self.n_nodes, self.n_nodes):
                    raise StructuralError("mask shape must be (V, V)")

    @property
    def n_edges(self):
        return n_edges(self.n_nodes)


def _uniform(rng, shape, fan_in):
    s = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-s, s, size=shape)


def init_params(arch, rng, mean_counts=None, supervised=False):
    """Randomly initialize all parameters as a dict of 2-D float arrays.

    ``gamma`` starts at ``log(mean_counts + 1e-8)`` so initial rates sit
    near the empirical per-edge mean.
    """
    D, K, H, V = arch.n_edges, arch.n_components, arch.hidden, arch.n_nodes
    p = {}
    for branch in ("mu", "lv"):
        p[f"enc_{branch}_W1"] = _uniform(rng, (H, D), D)
        p[f"enc_{branch}_b1"] = _uniform(rng, (1, H), D)
        p[f"enc_{branch}_W2"] = _uniform(rng, (K, H), H)
        p[f"enc_{branch}_b2"] = _uniform(rng, (1, K), H)

    if mean_counts is None:
        mean_counts = np.ones(D)
    p["gamma"] = np.log(np.asarray(mean_counts, dtype=np.float64) + 1e-8).reshape(1, D)

    if arch.decoder == "dense":
        Hd = arch.dense_hidden
        p["dense_W1"] = _uniform(rng, (Hd, K), K)
        p["dense_b1"] = _uniform(rng, (1, Hd), K)
        p["dense_W2"] = _uniform(rng, (D, Hd), Hd)
    else:
        p["alpha_raw"] = np.zeros((1, arch.n_factors))
        for r in range(arch.n_factors):
            p[f"dec_W1_{r}"] = _uniform(rng, (V, K), K)
        p["dec_b1"] = _uniform(rng, (1, V), K)
        for m in range(2, arch.n_layers + 1):
            for r, mask in enumerate(arch.masks):
                fan_in = int(mask.sum(axis=1).max())
                w = _uniform(rng, (V, V), fan_in)
                p[f"dec_W{m}_{r}"] = np.where(mask, w, 0.0)
            p[f"dec_b{m}"] = _uniform(rng, (1, V), V)

    if supervised:
        p["beta"] = _uniform(rng, (K, 1), K)
        p["intercept"] = np.zeros((1, 1))
        p["log_noise_var"] = np.zeros((1, 1))
    return p


def _v(x):
    return x if isinstance(x, ad.Value) else ad.Value(np.atleast_2d(np.asarray(x, dtype=np.float64)))


def _linear(x, W, b):
    return ad.add_bias(ad.matmul(x, ad.transpose(W)), b)


def encoder_input(counts):
    """Encoder features: ``log1p`` of edge counts."""
    return np.log1p(np.atleast_2d(np.asarray(counts, dtype=np.float64)))


def encode(counts, params):
    """Posterior mean and clamped log-variance, each ``(B, K)``.

    ``counts`` are raw edge counts (log1p is applied here) or an already
    wrapped :class:`Value` of encoder features.
    """
    x = counts if isinstance(counts, ad.Value) else ad.Value(encoder_input(counts))
    out = []
    for branch in ("mu", "lv"):
        h = ad.relu(_linear(x, _v(params[f"enc_{branch}_W1"]),
                            _v(params[f"enc_{branch}_b1"])))
        out.append(_linear(h, _v(params[f"enc_{branch}_W2"]),
                           _v(params[f"enc_{branch}_b2"])))
    mean, logvar = out
    return mean, ad.clamp(logvar, -LOGVAR_BOUND, LOGVAR_BOUND)


def reparameterize(mean, logvar, noise):
    """``z = mean + noise * exp(logvar / 2)``."""
    mean, logvar, noise = _v(mean), _v(logvar), _v(noise)
    half = ad.Value(np.full(logvar.shape, 0.5))
    return ad.add(mean, ad.mul(noise, ad.exp(ad.mul(half, logvar))))


def node_factors(z, params, arch):
    """Per-factor node embeddings ``X_r`` of shape ``(B, V)`` for each ``r``."""
    z = _v(z)
    acts = [ad.ACTIVATIONS[a] for a in arch.activations]
    factors = []
    for r in range(arch.n_factors):
        x = acts[0](_linear(z, _v(params[f"dec_W1_{r}"]), _v(params["dec_b1"])))
        for m in range(2, arch.n_layers + 1):
            w = _v(params[f"dec_W{m}_{r}"])
            if arch.positive_gcn_weights:
                w = ad.softplus(w)
            w = ad.masked(w, arch.masks[r])
            x = acts[m - 1](_linear(x, w, _v(params[f"dec_b{m}"])))
        factors.append(x)
    return factors


def decode_log_rates(z, params, arch):
    """Clamped log Poisson rates ``gamma + psi(z)``, shape ``(B, D)``."""
    z = _v(z)
    if z.shape[1] != arch.n_components:
        raise StructuralError(
            f"latent code has {z.shape[1]} dims, model expects {arch.n_components}")
    gamma = _v(params["gamma"])
    if arch.decoder == "dense":
        h = ad.relu(_linear(z, _v(params["dense_W1"]), _v(params["dense_b1"])))
        psi = ad.matmul(h, ad.transpose(_v(params["dense_W2"])))
    else:
        rows, cols = edge_index(arch.n_nodes)
        alpha = ad.exp(_v(params["alpha_raw"]))
        psi = None
        for r, x in enumerate(node_factors(z, params, arch)):
            term = ad.mul(ad.take_cols(x, rows), ad.take_cols(x, cols))
            term = ad.scale(term, ad.take_cols(alpha, [r]))
            psi = term if psi is None else ad.add(psi, term)
    return ad.clamp(ad.add_bias(psi, gamma), hi=LOG_RATE_MAX)


def decode_rates(z, params, arch):
    """Poisson rates ``(B, D)`` as a plain array."""
    return np.exp(decode_log_rates(z, params, arch).data)


def poisson_loglik(counts, rates):
    """Sum over cells of the Poisson log-pmf."""
    counts = np.asarray(counts, dtype=np.float64)
    rates = np.asarray(rates, dtype=np.float64)
    if np.any(counts < 0):
        raise StructuralError("counts must be nonnegative")
    if np.any(rates <= 0):
        raise NumericalError("rates must be positive")
    return float(np.sum(counts * np.log(rates) - rates - gammaln(counts + 1.0)))


def _poisson_terms(counts, log_rates):
    """Per-example Poisson log-likelihood ``(B, 1)`` from log rates."""
    c = ad.Value(counts)
    ll = ad.sub(ad.mul(c, log_rates), ad.exp(log_rates))
    const = gammaln(counts + 1.0).sum(axis=1, keepdims=True)
    return ad.sub(ad.sum_cols(ll), ad.Value(const))


def kl_std_normal(mean, logvar):
    """Per-example KL divergence from ``N(0, I)``, shape ``(B, 1)``."""
    mean, logvar = _v(mean), _v(logvar)
    ones = ad.Value(np.ones(mean.shape))
    inner = ad.sub(ad.add(ad.square(mean), ad.exp(logvar)), ad.add(ones, logvar))
    return ad.scale(ad.sum_cols(inner), ad.Value(np.array([[0.5]])))


def gaussian_loglik(y, z, params):
    """Per-example ``log N(y; z beta + b, sigma^2)``, shape ``(B, 1)``."""
    y = ad.Value(np.asarray(y, dtype=np.float64).reshape(-1, 1))
    pred = ad.add_bias(ad.matmul(_v(z), _v(params["beta"])), _v(params["intercept"]))
    lnv = _v(params["log_noise_var"])
    resid2 = ad.square(ad.sub(y, pred))
    inv_2var = ad.scale(ad.exp(ad.neg(lnv)), ad.Value(np.array([[0.5]])))
    norm = ad.scale(ad.add(lnv, ad.Value(np.array([[LOG_2PI]]))),
                    ad.Value(np.array([[-0.5]])))
    return ad.add_bias(ad.neg(ad.scale(resid2, inv_2var)), norm)


def elbo_terms(counts, params, arch, noise, y=None):
    """Monte-Carlo pieces of the per-example loss.

    Parameters
    ----------
    counts : ndarray of shape (B, D)
    params : dict
        Arrays or tracked values.
    arch : Architecture
    noise : ndarray of shape (L, B, K)
        Frozen standard-normal draws for the reparameterization.
    y : ndarray of shape (B,), optional
        Traits; adds the Gaussian regression term.

    Returns
    -------
    recon, kl, reg : Value of shape (B, 1)
        MC-averaged Poisson log-likelihood, KL term, and MC-averaged Gaussian
        log-likelihood (``None`` when ``y`` is None).
    """
    counts = np.atleast_2d(np.asarray(counts, dtype=np.float64))
    noise = np.asarray(noise, dtype=np.float64)
    if noise.ndim == 2:
        noise = noise[None]
    if noise.shape[1:] != (counts.shape[0], arch.n_components):
        raise StructuralError(f"noise shape {noise.shape} does not match batch")
    mean, logvar = encode(counts, params)
    n_mc = noise.shape[0]
    inv_l = ad.Value(np.array([[1.0 / n_mc]]))
    recon = reg = None
    for eps in noise:
        z = reparameterize(mean, logvar, eps)
        term = _poisson_terms(counts, decode_log_rates(z, params, arch))
        recon = term if recon is None else ad.add(recon, term)
        if y is not None:
            g = gaussian_loglik(y, z, params)
            reg = g if reg is None else ad.add(reg, g)
    recon = ad.scale(recon, inv_l)
    if reg is not None:
        reg = ad.scale(reg, inv_l)
    return recon, kl_std_normal(mean, logvar), reg


def elbo_loss(counts, params, arch, noise):
    """Negative ELBO estimate summed over the batch (scalar value)."""
    recon, kl, _ = elbo_terms(counts, params, arch, noise)
    return ad.sum_all(ad.sub(kl, recon))


def supervised_elbo_loss(counts, y, params, arch, noise):
    """Negative supervised ELBO summed over the batch (scalar value)."""
    recon, kl, reg = elbo_terms(counts, params, arch, noise, y=y)
    return ad.sum_all(ad.sub(kl, ad.add(recon, reg)))
