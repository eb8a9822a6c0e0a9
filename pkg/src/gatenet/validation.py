import numpy as np
from sklearn.utils import check_array

from .exceptions import StructuralError
from .graphs import check_graph, n_nodes_from_edges, vectorize


def check_edge_counts(X):
    """Coerce a stack of graphs ``(n, V, V)`` or edge vectors ``(n, D)``.

    Returns the ``(n, D)`` float edge matrix and ``V``.
    """
    if isinstance(X, (list, tuple)) and X and np.ndim(X[0]) == 2:
        X = np.stack([np.asarray(g) for g in X])
    X = np.asarray(X)
    if X.ndim == 3:
        counts = np.stack([vectorize(check_graph(g)) for g in X]).astype(np.float64)
        return counts, X.shape[1]
    counts = check_array(X, dtype=np.float64)
    if np.any(counts < 0):
        raise StructuralError("edge counts must be nonnegative")
    if not np.array_equal(counts, np.round(counts)):
        raise StructuralError("edge counts must be integers")
    return counts, n_nodes_from_edges(counts.shape[1])


def check_traits(y, n_samples):
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape != (n_samples,):
        raise StructuralError(f"got {y.size} traits for {n_samples} graphs")
    if not np.all(np.isfinite(y)):
        raise StructuralError("traits must be finite")
    return y
