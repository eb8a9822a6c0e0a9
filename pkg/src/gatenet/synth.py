"""Simulated graph corpora, traits and a template distance matrix."""

import csv
import os
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .exceptions import StructuralError
from .graphs import check_graph, hop_distances, read_graph_csv, write_graph_csv

FAMILIES = ("sparse", "community", "small_world", "scale_free")

DEFAULT_PARAMETERS = {
    "sparse": {"p": 0.05},
    "community": {"n_blocks": 4, "p_within": 0.30, "p_between": 0.03},
    "small_world": {"k_ring": 10, "p_rewire": 0.1},
    "scale_free": {"m_attach": 3},
}


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise StructuralError(f"{name}={p} is not a probability")


@dataclass(frozen=True)
class FamilySpec:
    """A random-graph family and its parameters.

    ``parameters`` falls back to :data:`DEFAULT_PARAMETERS` for missing keys.
    Community block sizes default to ``n_blocks`` near-equal blocks.
    """

    family: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise StructuralError(f"unknown graph family {self.family!r}")
        unknown = set(self.parameters) - set(DEFAULT_PARAMETERS[self.family]) - {"sizes"}
        if unknown:
            raise StructuralError(f"unknown {self.family} parameters {sorted(unknown)}")

    def resolved(self):
        return {**DEFAULT_PARAMETERS[self.family], **self.parameters}


def _block_sizes(params, n_nodes):
    if "sizes" in params:
        sizes = [int(s) for s in params["sizes"]]
    else:
        n_blocks = int(params["n_blocks"])
        if n_blocks < 1:
            raise StructuralError("n_blocks must be positive")
        base, extra = divmod(n_nodes, n_blocks)
        sizes = [base + (i < extra) for i in range(n_blocks)]
    if sum(sizes) != n_nodes or min(sizes) < 1:
        raise StructuralError(f"block sizes {sizes} must be positive and sum to V")
    return sizes


def generate_graph(spec, n_nodes=68, seed=0):
    """Draw one binary symmetric graph from ``spec``.

    sparse: independent Bernoulli(p) edges. community: stochastic block
    model. small_world: Watts-Strogatz rewiring of a ring lattice.
    scale_free: Barabasi-Albert preferential attachment, which yields
    exactly ``m_attach * (V - m_attach)`` edges.
    """
    params = spec.resolved()
    seed = int(seed)
    if spec.family == "sparse":
        _check_prob("p", params["p"])
        g = nx.gnp_random_graph(n_nodes, params["p"], seed=seed)
    elif spec.family == "community":
        sizes = _block_sizes(params, n_nodes)
        _check_prob("p_within", params["p_within"])
        _check_prob("p_between", params["p_between"])
        probs = [[params["p_within"] if i == j else params["p_between"]
                  for j in range(len(sizes))] for i in range(len(sizes))]
        g = nx.stochastic_block_model(sizes, probs, seed=seed)
    elif spec.family == "small_world":
        k_ring = int(params["k_ring"])
        _check_prob("p_rewire", params["p_rewire"])
        if k_ring % 2 or not 0 < k_ring < n_nodes:
            raise StructuralError("k_ring must be even, positive and < V")
        g = nx.watts_strogatz_graph(n_nodes, k_ring, params["p_rewire"], seed=seed)
    else:
        m = int(params["m_attach"])
        if not 1 <= m < n_nodes:
            raise StructuralError("m_attach must satisfy 1 <= m_attach < V")
        g = nx.barabasi_albert_graph(n_nodes, m, seed=seed)
    a = nx.to_numpy_array(g, nodelist=range(n_nodes), dtype=np.int64)
    return check_graph(a)


@dataclass(frozen=True)
class TraitSpec:
    """Quadratic-form trait model.

    case 1: ``a' A a + eps``; case 2: ``q**2 + q**3 + eps`` with ``q = a' A a``.
    """

    alpha: np.ndarray
    noise_sd: float = 1.0
    case: int = 1

    def __post_init__(self):
        if self.case not in (1, 2):
            raise StructuralError("trait case must be 1 or 2")
        if self.noise_sd < 0:
            raise StructuralError("noise_sd must be nonnegative")


def block_alpha(n_nodes=68, n_ones=17):
    """``(1, ..., 1, 0, ..., 0)`` with ``n_ones`` leading ones."""
    alpha = np.zeros(n_nodes)
    alpha[:n_ones] = 1.0
    return alpha


def simulate_trait(g, spec, seed=0):
    g = check_graph(g)
    alpha = np.asarray(spec.alpha, dtype=np.float64)
    if alpha.shape != (g.shape[0],):
        raise StructuralError(
            f"alpha has length {alpha.size}, graph has {g.shape[0]} nodes")
    q = float(alpha @ g @ alpha)
    signal = q if spec.case == 1 else q ** 2 + q ** 3
    eps = np.random.default_rng(seed).normal(0.0, spec.noise_sd) if spec.noise_sd > 0 else 0.0
    return signal + eps


@dataclass(frozen=True)
class Standardizer:
    mean: float
    sd: float

    def transform(self, ys):
        return (np.asarray(ys, dtype=np.float64) - self.mean) / self.sd

    def inverse_transform(self, zs):
        return np.asarray(zs, dtype=np.float64) * self.sd + self.mean


def standardize_traits(ys):
    """Z-score with the ``n - 1`` sample SD; returns ``(scaled, Standardizer)``."""
    ys = np.asarray(ys, dtype=np.float64)
    if ys.ndim != 1 or ys.size < 2:
        raise StructuralError("need at least two traits")
    sd = ys.std(ddof=1)
    if not sd > 0:
        raise StructuralError("traits have zero variance")
    st = Standardizer(float(ys.mean()), float(sd))
    return st.transform(ys), st


def template_distance(graphs, edge_freq_threshold=0.5):
    """Hop distances on the graph of edges present in enough of ``graphs``.

    Edge ``(u, v)`` enters the template when the fraction of graphs with a
    positive weight there is at least ``edge_freq_threshold``; unreachable
    pairs are ``inf``.
    """
    graphs = list(graphs)
    if not graphs:
        raise StructuralError("template_distance needs at least one graph")
    if not 0.0 < edge_freq_threshold <= 1.0:
        raise StructuralError("edge_freq_threshold must lie in (0, 1]")
    stack = np.stack([check_graph(g, integer=False) for g in graphs])
    freq = (stack > 0).mean(axis=0)
    template = freq >= edge_freq_threshold
    np.fill_diagonal(template, False)
    return hop_distances(template)


@dataclass
class Corpus:
    graphs: np.ndarray
    families: list
    seeds: list
    traits_raw: np.ndarray
    traits: np.ndarray
    standardizer: Standardizer

    @property
    def family_labels(self):
        return np.array([FAMILIES.index(f) for f in self.families])


def simulate_corpus(per_family=100, n_nodes=68, seed=0, case=1, n_ones=17,
                    noise_sd=1.0, families=FAMILIES, parameters=None):
    """The four-family corpus with standardized traits.

    Sample ``i`` uses graph seed ``seed * 1_000_003 + i`` and the same seed
    for its trait noise, so any sample can be regenerated on its own.
    """
    parameters = parameters or {}
    alpha = block_alpha(n_nodes, n_ones)
    trait_spec = TraitSpec(alpha, noise_sd, case)
    graphs, fams, seeds, raw = [], [], [], []
    i = 0
    for fam in families:
        spec = FamilySpec(fam, dict(parameters.get(fam, {})))
        for _ in range(per_family):
            s = int(seed) * 1_000_003 + i
            g = generate_graph(spec, n_nodes, s)
            graphs.append(g)
            fams.append(fam)
            seeds.append(s)
            raw.append(simulate_trait(g, trait_spec, s))
            i += 1
    raw = np.array(raw)
    scaled, st = standardize_traits(raw)
    return Corpus(np.stack(graphs), fams, seeds, raw, scaled, st)


def write_corpus(corpus, directory):
    """One graph CSV per sample plus ``manifest.csv``."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "manifest.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "family", "seed", "trait_raw",
                         "trait_standardized"])
        for i, g in enumerate(corpus.graphs):
            sample_id = f"g{i:04d}"
            write_graph_csv(g, os.path.join(directory, f"{sample_id}.csv"))
            writer.writerow([sample_id, corpus.families[i], corpus.seeds[i],
                             repr(float(corpus.traits_raw[i])),
                             repr(float(corpus.traits[i]))])


def read_corpus(directory):
    """Inverse of :func:`write_corpus`."""
    graphs, fams, seeds, raw, std = [], [], [], [], []
    with open(os.path.join(directory, "manifest.csv"), newline="") as fh:
        for row in csv.DictReader(fh):
            graphs.append(read_graph_csv(os.path.join(directory, row["sample_id"] + ".csv")))
            fams.append(row["family"])
            seeds.append(int(row["seed"]))
            raw.append(float(row["trait_raw"]))
            std.append(float(row["trait_standardized"]))
    raw = np.array(raw)
    std = np.array(std)
    sd = raw.std(ddof=1) if raw.size > 1 else 1.0
    return Corpus(np.stack(graphs), fams, seeds, raw, std,
                  Standardizer(float(raw.mean()), float(sd)))
