"""Inference on generated graphs: posterior predictive checks, trait-conditional
summary bands, conditional mean networks and top-k mean edge differences."""

import csv
from dataclasses import dataclass

import numpy as np
from scipy import stats
from sklearn.utils.validation import check_is_fitted

from .exceptions import StructuralError
from .graphs import SummaryStats, devectorize, edge_index, summaries

__all__ = [
    "SummaryDistribution", "ConditionalBand", "EdgeDelta",
    "posterior_predictive_check", "conditional_band", "conditional_mean_network",
    "mean_difference_topk", "write_band_csv", "write_edge_delta_csv",
]

MEASURES = SummaryStats.MEASURES


@dataclass(frozen=True)
class SummaryDistribution:
    """Finite values of one summary measure over a set of graphs.

    ``n_dropped`` counts graphs where the measure was undefined (for
    example the path length of an empty graph).
    """

    measure: str
    samples: np.ndarray
    source: str
    n_dropped: int = 0

    def quantile(self, q):
        return np.quantile(self.samples, q)

    def median(self):
        return float(np.median(self.samples))


def _summary_table(graphs, binarize):
    """``(n, 4)`` matrix of summaries, NaN where undefined."""
    out = np.empty((len(graphs), len(MEASURES)))
    for i, g in enumerate(graphs):
        if binarize:
            g = (g > 0).astype(np.int64)
        out[i] = [getattr(summaries(g), m) for m in MEASURES]
    return out


def _split(table, measures, source):
    result = {}
    for m in measures:
        col = table[:, MEASURES.index(m)]
        keep = np.isfinite(col)
        if not keep.any():
            raise StructuralError(f"{m} is undefined on every {source} graph")
        result[m] = SummaryDistribution(m, col[keep], source, int((~keep).sum()))
    return result


def posterior_predictive_check(model, observed, n_draws=1000, random_state=0,
                               measures=MEASURES, binarize=False):
    """Summary distributions of prior-predictive draws next to the observed ones.

    Parameters
    ----------
    model : fitted GATE
    observed : sequence of graphs
    n_draws : int
    random_state : int
    measures : sequence of str
    binarize : bool, default=False
        Dichotomize generated graphs (count >= 1) before summarizing, for
        comparison with binary observed graphs.

    Returns
    -------
    dict of str -> (SummaryDistribution, SummaryDistribution)
        ``(observed, generated)`` for each measure.
    """
    check_is_fitted(model, "params_")
    if n_draws < 1:
        raise StructuralError("n_draws must be at least 1")
    unknown = set(measures) - set(MEASURES)
    if unknown:
        raise StructuralError(f"unknown measures {sorted(unknown)}")
    generated = model.sample(n_draws, random_state=random_state)
    gen = _split(_summary_table(generated, binarize), measures, "generated")
    obs = _split(_summary_table(list(observed), False), measures, "observed")
    return {m: (obs[m], gen[m]) for m in measures}


@dataclass(frozen=True)
class ConditionalBand:
    """Mean and quantile band of one summary over a grid of trait values.

    Grid points where the summary was undefined on every draw have NaN
    entries and ``flagged`` set.
    """

    measure: str
    y_grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_effective: np.ndarray
    draws_per_y: int

    @property
    def flagged(self):
        return self.n_effective == 0


def conditional_band(model, y_grid, n_per_y=500, quantiles=(0.025, 0.975),
                     random_state=0, measures=("density", "avg_path_length"),
                     binarize=False):
    """Summary bands of graphs drawn from ``p(A | y)`` along ``y_grid``.

    Each grid point draws from its own seed stream, spawned from
    ``random_state`` in grid order.
    """
    check_is_fitted(model, "params_")
    lo_q, hi_q = quantiles
    if not 0.0 <= lo_q <= hi_q <= 1.0:
        raise StructuralError("quantiles must satisfy 0 <= lower <= upper <= 1")
    if n_per_y < 1:
        raise StructuralError("n_per_y must be at least 1")
    y_grid = np.asarray(y_grid, dtype=np.float64).ravel()
    streams = np.random.SeedSequence(random_state).spawn(y_grid.size)
    shape = (len(measures), y_grid.size)
    mean, lower, upper = np.full(shape, np.nan), np.full(shape, np.nan), np.full(shape, np.nan)
    n_eff = np.zeros(shape, dtype=np.int64)
    for j, (y, ss) in enumerate(zip(y_grid, streams)):
        graphs = model.conditional_sample(y, n_per_y, random_state=np.random.default_rng(ss))
        table = _summary_table(graphs, binarize)
        for i, m in enumerate(measures):
            col = table[:, MEASURES.index(m)]
            col = col[np.isfinite(col)]
            n_eff[i, j] = col.size
            if col.size:
                mean[i, j] = col.mean()
                lower[i, j], upper[i, j] = np.quantile(col, [lo_q, hi_q])
                # the mean can sit outside a narrow band of a skewed sample
                lower[i, j] = min(lower[i, j], mean[i, j])
                upper[i, j] = max(upper[i, j], mean[i, j])
    return {m: ConditionalBand(m, y_grid, mean[i], lower[i], upper[i], n_eff[i],
                               int(n_per_y))
            for i, m in enumerate(measures)}


def write_band_csv(bands, path):
    """Rows ``(y, measure, mean, lower, upper, n_effective)``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "measure", "mean", "lower", "upper", "n_effective"])
        for band in bands.values():
            for j, y in enumerate(band.y_grid):
                writer.writerow([repr(float(y)), band.measure, repr(float(band.mean[j])),
                                 repr(float(band.lower[j])), repr(float(band.upper[j])),
                                 int(band.n_effective[j])])


def _uniform_streams(rng, n, n_components, n_edges):
    noise = rng.standard_normal((n, n_components))
    # open interval keeps the Poisson inverse CDF finite
    u = rng.random((n, n_edges))
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return noise, u


def _mean_edges(model, y, noise, u, binarize):
    rates = model.conditional_rates(y, noise)
    if binarize:
        # P(count >= 1) = 1 - exp(-rate) = P(u > exp(-rate))
        draws = (u > np.exp(-rates)).astype(np.float64)
    else:
        draws = stats.poisson.ppf(u, rates)
    return draws.mean(axis=0)


def conditional_mean_network(model, y, n=100, random_state=0, binarize=True):
    """Average of ``n`` graphs drawn from ``p(A | y)``.

    With ``binarize`` each draw is dichotomized (count >= 1) first, so the
    entries are empirical edge probabilities in ``[0, 1]``. Draws use the
    inverse Poisson CDF of shared uniforms so that calls with the same
    ``random_state`` share their randomness across ``y``.
    """
    check_is_fitted(model, "params_")
    if n < 1:
        raise StructuralError("n must be at least 1")
    rng = np.random.default_rng(random_state)
    noise, u = _uniform_streams(rng, int(n), model.arch_.n_components,
                                model.n_features_in_)
    return devectorize(_mean_edges(model, y, noise, u, binarize), model.n_nodes_)


@dataclass(frozen=True)
class EdgeDelta:
    """Edges ``(u, v)`` with ``u > v``, their mean differences and overall
    rank (1-based) among the top-k by absolute value."""

    u: np.ndarray
    v: np.ndarray
    delta: np.ndarray
    rank: np.ndarray

    def __len__(self):
        return self.delta.size


def mean_difference_topk(model, y_low, y_high, n=100, k=50, random_state=0,
                         common_random_numbers=True):
    """Largest mean edge differences between ``p(A | y_high)`` and ``p(A | y_low)``.

    Draws are dichotomized before averaging. The ``k`` edges with largest
    ``|delta|`` (ties by ``(u, v)``) are split by sign; exact zeros are
    dropped. With common random numbers both trait values reuse one noise
    stream, so swapping them negates every delta exactly.

    Returns
    -------
    positive, negative : EdgeDelta
    """
    check_is_fitted(model, "params_")
    n_cells = model.n_features_in_
    if not 1 <= k <= n_cells:
        raise StructuralError(f"k={k} must lie in [1, {n_cells}]")
    if n < 1:
        raise StructuralError("n must be at least 1")
    K = model.arch_.n_components
    if common_random_numbers:
        rng = np.random.default_rng(random_state)
        low = high = _uniform_streams(rng, int(n), K, n_cells)
    else:
        ss_low, ss_high = np.random.SeedSequence(random_state).spawn(2)
        low = _uniform_streams(np.random.default_rng(ss_low), int(n), K, n_cells)
        high = _uniform_streams(np.random.default_rng(ss_high), int(n), K, n_cells)
    delta = (_mean_edges(model, y_high, *high, binarize=True)
             - _mean_edges(model, y_low, *low, binarize=True))
    rows, cols = edge_index(model.n_nodes_)
    order = np.lexsort((cols, rows, -np.abs(delta)))[:k]
    ranks = np.arange(1, order.size + 1)
    picked = delta[order]

    def subset(keep):
        idx = order[keep]
        return EdgeDelta(rows[idx], cols[idx], delta[idx], ranks[keep])

    return subset(picked > 0), subset(picked < 0)


def write_edge_delta_csv(positive, negative, path):
    """Rows ``(u, v, delta, rank, sign)`` in rank order."""
    rows = []
    for part, sign in ((positive, 1), (negative, -1)):
        for i in range(len(part)):
            rows.append((int(part.rank[i]), int(part.u[i]), int(part.v[i]),
                         float(part.delta[i]), sign))
    rows.sort()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["u", "v", "delta", "rank", "sign"])
        for rank, u, v, d, sign in rows:
            writer.writerow([u, v, repr(d), rank, sign])
