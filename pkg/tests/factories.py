import numpy as np

from gatenet.core import Architecture, init_params
from gatenet.graphs import knn_from_distance, n_edges


def ring_distance(n):
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None])
    return np.minimum(d, n - d).astype(float)


def small_model(n_nodes=10, n_components=4, n_factors=2, n_layers=2, k=2,
                hidden=6, seed=0, supervised=False, decoder="latent_space",
                activations=None, positive=False):
    """Architecture plus randomly initialized parameters for quick tests."""
    masks = ()
    if decoder == "latent_space" and n_layers > 1:
        masks = tuple(knn_from_distance(ring_distance(n_nodes), k).mask()
                      for _ in range(n_factors))
    arch = Architecture(
        n_nodes=n_nodes, n_components=n_components, n_factors=n_factors,
        n_layers=n_layers, hidden=hidden,
        activations=activations or ("sigmoid",) * n_layers,
        decoder=decoder, dense_hidden=hidden, positive_gcn_weights=positive,
        masks=masks)
    rng = np.random.default_rng(seed)
    mean_counts = rng.uniform(0.2, 3.0, size=n_edges(n_nodes))
    params = init_params(arch, rng, mean_counts, supervised=supervised)
    if "alpha_raw" in params:
        params["alpha_raw"] = rng.normal(scale=0.3, size=params["alpha_raw"].shape)
    return arch, params


def random_counts(n_graphs, n_nodes, seed=0, lam=1.0):
    rng = np.random.default_rng(seed)
    return rng.poisson(lam, size=(n_graphs, n_edges(n_nodes))).astype(float)
