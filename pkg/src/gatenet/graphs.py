"""Graph containers, vectorization, k-NN neighborhoods and network summaries.

A graph is a symmetric ``(V, V)`` array of nonnegative integer counts with a
zero diagonal. Its edge vector holds the strict lower triangle in
column-major order::

    A[1,0], A[2,0], ..., A[V-1,0], A[2,1], ..., A[V-1,V-2]

Every module in the package goes through :func:`edge_index` for this mapping.
"""

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .exceptions import StructuralError

__all__ = [
    "NeighborhoodMap",
    "SummaryStats",
    "check_distance",
    "check_graph",
    "devectorize",
    "dichotomize",
    "edge_index",
    "hop_distances",
    "knn_from_distance",
    "n_edges",
    "n_nodes_from_edges",
    "read_distance_csv",
    "read_graph_csv",
    "summaries",
    "vectorize",
    "write_distance_csv",
    "write_graph_csv",
]


def n_edges(n_nodes):
    return n_nodes * (n_nodes - 1) // 2


def n_nodes_from_edges(length):
    """Invert ``V(V-1)/2``; raises if ``length`` is not triangular."""
    n = int(round((1 + np.sqrt(1 + 8 * length)) / 2))
    if n < 2 or n_edges(n) != length:
        raise StructuralError(
            f"edge vector length {length} is not V(V-1)/2 for any V >= 2")
    return n


@lru_cache(maxsize=32)
def _edge_index(n_nodes):
    cols, rows = np.triu_indices(n_nodes, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def edge_index(n_nodes):
    """Row (``u``) and column (``v``) indices of each edge position, ``u > v``."""
    return _edge_index(int(n_nodes))


def check_graph(g, integer=True):
    """Validate a single graph and return it as an ndarray.

    Parameters
    ----------
    g : array-like of shape (V, V)
    integer : bool, default=True
        Require integer-valued entries and return an ``int64`` array.
        Mean networks and other real-valued matrices pass ``False``.
    """
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
        raise StructuralError(f"graph must be a square matrix, got {g.shape}")
    if not np.issubdtype(g.dtype, np.number) or g.dtype == np.bool_:
        g = g.astype(np.float64)
    if not np.all(np.isfinite(g)):
        raise StructuralError("graph weights must be finite")
    if np.any(g < 0):
        raise StructuralError("graph weights must be nonnegative")
    if np.any(np.diag(g) != 0):
        raise StructuralError("graph must not contain self-loops")
    if not np.array_equal(g, g.T):
        raise StructuralError("graph must be symmetric")
    if integer:
        if not np.array_equal(g, np.round(g)):
            raise StructuralError("graph weights must be integers")
        g = g.astype(np.int64)
    return g


def vectorize(g):
    """Strict lower triangle of ``g`` in column-major order."""
    g = check_graph(g, integer=False)
    rows, cols = edge_index(g.shape[0])
    return g[rows, cols]


def devectorize(values, n_nodes=None):
    """Rebuild the symmetric matrix from an edge vector.

    ``n_nodes`` is inferred from the length when omitted.
    """
    values = np.asarray(values)
    if values.ndim != 1:
        raise StructuralError("edge vector must be one-dimensional")
    if n_nodes is None:
        n_nodes = n_nodes_from_edges(values.size)
    elif values.size != n_edges(n_nodes):
        raise StructuralError(
            f"edge vector of length {values.size} does not match "
            f"V={n_nodes} (expected {n_edges(n_nodes)})")
    if np.any(values < 0):
        raise StructuralError("edge weights must be nonnegative")
    rows, cols = edge_index(n_nodes)
    g = np.zeros((n_nodes, n_nodes), dtype=values.dtype)
    g[rows, cols] = values
    g[cols, rows] = values
    return g


def dichotomize(g, threshold=0.0):
    """1 where weight exceeds ``threshold``, else 0."""
    g = check_graph(g, integer=False)
    return (g > threshold).astype(np.int64)


# -- distances and neighborhoods ---------------------------------------------

def check_distance(b):
    """Validate a distance matrix; ``np.inf`` marks unreachable pairs."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise StructuralError(f"distance matrix must be square, got {b.shape}")
    if np.any(np.isnan(b)):
        raise StructuralError("distance matrix contains NaN")
    if np.any(np.diag(b) != 0):
        raise StructuralError("distance matrix must have a zero diagonal")
    if not np.array_equal(b, b.T):
        raise StructuralError("distance matrix must be symmetric")
    off = ~np.eye(b.shape[0], dtype=bool)
    if np.any(b[off] <= 0):
        raise StructuralError("off-diagonal distances must be positive or inf")
    return b


def hop_distances(g):
    """Hop-count shortest paths on the support of ``g`` (inf if unreachable)."""
    adj = (np.asarray(g) > 0).astype(np.float64)
    return shortest_path(adj, method="D", directed=False, unweighted=True)


@dataclass(frozen=True)
class NeighborhoodMap:
    """Per-node nearest-neighbor lists defining the GCN weight masks."""

    neighbors: tuple
    k: int

    @property
    def n_nodes(self):
        return len(self.neighbors)

    def mask(self):
        """Boolean ``(V, V)`` support: the diagonal plus each row's neighbors."""
        m = np.eye(self.n_nodes, dtype=bool)
        for u, nbrs in enumerate(self.neighbors):
            m[u, list(nbrs)] = True
        return m


def knn_from_distance(b, k):
    """The ``k`` closest reachable nodes of every node.

    Ties are broken by ascending node index. A node with fewer than ``k``
    reachable nodes keeps all of them.
    """
    b = check_distance(b)
    n = b.shape[0]
    k = int(k)
    if k < 1:
        raise StructuralError("k must be a positive integer")
    if k >= n:
        raise StructuralError(f"k={k} must be smaller than V={n}")
    neighbors = []
    for u in range(n):
        d = b[u]
        cand = np.flatnonzero(np.isfinite(d) & (d > 0))
        order = np.lexsort((cand, d[cand]))
        neighbors.append(tuple(int(v) for v in cand[order[:k]]))
    return NeighborhoodMap(tuple(neighbors), k)


# -- summaries -----------------------------------------------------------------

@dataclass(frozen=True)
class SummaryStats:
    """Four network summaries; undefined values are NaN."""

    density: float
    mean_eigencentrality: float
    avg_path_length: float
    avg_degree: float

    MEASURES = ("density", "mean_eigencentrality", "avg_path_length",
                "avg_degree")

    def as_dict(self):
        return {m: getattr(self, m) for m in self.MEASURES}


def _principal_eigenvector(w, max_iter=1000, tol=1e-10):
    # power iteration on w + I: same eigenvectors, but the Perron root
    # strictly dominates, so bipartite graphs converge too
    n = w.shape[0]
    shifted = w + np.eye(n)
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        nxt = shifted @ x
        nxt /= np.linalg.norm(nxt)
        done = np.linalg.norm(nxt - x) < tol
        x = nxt
        if done:
            break
    return np.abs(x)


def summaries(g):
    """Density, mean eigencentrality, average path length and average degree.

    Density and degree count nonzero entries. Path length is the mean hop
    count over reachable unordered pairs of the binarized graph.
    Eigencentrality is the unit-norm principal eigenvector of the weighted
    adjacency matrix.
    """
    g = check_graph(g, integer=False).astype(np.float64)
    n = g.shape[0]
    binary = g > 0
    n_links = int(np.count_nonzero(binary)) // 2
    density = n_links / n_edges(n)
    avg_degree = 2.0 * n_links / n
    if n_links == 0:
        return SummaryStats(density, float("nan"), float("nan"), avg_degree)

    hops = hop_distances(binary)
    iu = np.triu_indices(n, k=1)
    reach = hops[iu]
    reach = reach[np.isfinite(reach)]
    avg_path_length = float(reach.sum() / reach.size)

    centrality = _principal_eigenvector(g)
    return SummaryStats(density, float(centrality.mean()), avg_path_length,
                        avg_degree)


# -- CSV ---------------------------------------------------------------------

def read_graph_csv(path):
    """Header-less ``V`` rows of ``V`` comma-separated integers."""
    with open(path, newline="") as fh:
        rows = [[int(x) for x in row] for row in csv.reader(fh) if row]
    return check_graph(np.array(rows, dtype=np.int64))


def write_graph_csv(g, path):
    g = check_graph(g)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(g.tolist())


def read_distance_csv(path):
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    return check_distance(np.array(rows))


def write_distance_csv(b, path):
    b = check_distance(b)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in b:
            writer.writerow(["inf" if np.isinf(x) else repr(float(x))
                             for x in row])
