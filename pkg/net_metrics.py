"""
Cascade Lifecycle: Node Measures on Temporal Windows
Six node-centric measures computed on the undirected simple graph G^N of each
temporal window, plus the top-k Jaccard agreement between measures.

    degree            k_i
    degree_entropy    H_i = -sum_{j in n(i)} (k_j / k_i) ln(k_j / k_i)
    clustering        C_i = 2 t_i / (k_i (k_i - 1))
    pagerank          damped random walk, power iteration
    betweenness       Brandes, unnormalized
    alpha_centrality  x = (I - alpha A)^-1 e, alpha = fraction / lambda_max

Degree entropy is negative for a node whose neighbours outrank it in degree;
every other measure is nonnegative.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum

import networkx as nx
import numpy as np

from exceptions import ConvergenceError
from stats_num import dense_solve, power_iteration

logger = logging.getLogger(__name__)

# ==========================================
# 1. SETTINGS
# ==========================================
DAMPING = 0.85
PAGERANK_TOL = 1e-10
PAGERANK_MAX_ITER = 1000
ALPHA_FRACTION = 0.5
TOP_K = 20


class Measure(str, Enum):
    DEGREE = "degree"
    DEGREE_ENTROPY = "degree_entropy"
    CLUSTERING = "clustering"
    PAGERANK = "pagerank"
    BETWEENNESS = "betweenness"
    ALPHA_CENTRALITY = "alpha_centrality"


ALL_MEASURES = tuple(Measure)


@dataclass(frozen=True)
class NodeScores:
    window_index: int
    measure: Measure
    scores: dict

    def ranked(self):
        """Nodes by descending score, ties by node id."""
        return sorted(self.scores, key=lambda n: (-self.scores[n], n))


# ==========================================
# 2. GRAPH CONSTRUCTION
# ==========================================
def window_graph(window):
    """Undirected simple graph on the window node set, built in sorted order."""
    G = nx.Graph()
    G.add_nodes_from(sorted(window.nodes))
    G.add_edges_from(sorted((u, v) for u, v in window.edges
                            if u != v and u in window.nodes and v in window.nodes))
    return G


def _as_graph(window):
    return window if isinstance(window, nx.Graph) else window_graph(window)


def _index(window):
    if isinstance(window, nx.Graph):
        return window.graph.get("index", 0)
    return window.index


def _check_nonempty(G):
    if G.number_of_nodes() == 0:
        raise ValueError("window has no nodes")


# ==========================================
# 3. MEASURES
# ==========================================
def degree(window):
    G = _as_graph(window)
    _check_nonempty(G)
    return NodeScores(_index(window), Measure.DEGREE, {n: float(k) for n, k in G.degree()})


def degree_entropy(window):
    G = _as_graph(window)
    _check_nonempty(G)
    scores = {}
    for node in G.nodes:
        k_i = G.degree(node)
        if k_i == 0:
            scores[node] = 0.0
            continue
        shares = np.array([G.degree(j) for j in G.neighbors(node)], dtype=float) / k_i
        scores[node] = float(-np.sum(shares * np.log(shares)))
    return NodeScores(_index(window), Measure.DEGREE_ENTROPY, scores)


def clustering(window):
    G = _as_graph(window)
    _check_nonempty(G)
    return NodeScores(_index(window), Measure.CLUSTERING,
                      {n: float(c) for n, c in nx.clustering(G).items()})


def pagerank(window, damping=DAMPING, tol=PAGERANK_TOL, max_iter=PAGERANK_MAX_ITER):
    """
    Power iteration on the column-stochastic walk matrix; isolated nodes spread
    their mass uniformly. Stops when the L1 change drops below `tol`.
    """
    if not 0 < damping < 1:
        raise ValueError("damping must lie in (0, 1)")
    G = _as_graph(window)
    _check_nonempty(G)
    nodes = list(G.nodes)
    n = len(nodes)
    A = nx.to_numpy_array(G, nodelist=nodes, dtype=float)
    deg = A.sum(axis=0)
    dangling = deg == 0
    P = np.divide(A, deg, out=np.zeros_like(A), where=~dangling)

    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = damping * (P @ x + x[dangling].sum() / n) + (1.0 - damping) / n
        nxt /= nxt.sum()
        change = np.abs(nxt - x).sum()
        x = nxt
        if change < tol:
            return NodeScores(_index(window), Measure.PAGERANK, dict(zip(nodes, x.tolist())))
    raise ConvergenceError(f"pagerank did not converge in {max_iter} iterations",
                           last=dict(zip(nodes, x.tolist())))


def betweenness(window):
    G = _as_graph(window)
    _check_nonempty(G)
    scores = nx.betweenness_centrality(G, normalized=False)
    return NodeScores(_index(window), Measure.BETWEENNESS, {n: float(b) for n, b in scores.items()})


def largest_eigenvalue(A):
    try:
        return power_iteration(A)
    except ConvergenceError as err:
        logger.warning("lambda_max power iteration stopped early; using %.10g", err.last)
        return err.last


def alpha_centrality(window, alpha_fraction=ALPHA_FRACTION):
    if not 0 < alpha_fraction < 1:
        raise ValueError(f"alpha_fraction must lie in (0, 1), got {alpha_fraction}")
    G = _as_graph(window)
    _check_nonempty(G)
    nodes = list(G.nodes)
    n = len(nodes)
    A = nx.to_numpy_array(G, nodelist=nodes, dtype=float)
    lam = largest_eigenvalue(A)
    if lam <= 0:
        x = np.ones(n)
    else:
        x = dense_solve(np.eye(n) - (alpha_fraction / lam) * A, np.ones(n))
    return NodeScores(_index(window), Measure.ALPHA_CENTRALITY, dict(zip(nodes, x.tolist())))


def compute_measure(window, measure, damping=DAMPING, pagerank_tol=PAGERANK_TOL,
                    max_iter=PAGERANK_MAX_ITER, alpha_fraction=ALPHA_FRACTION):
    measure = Measure(measure)
    if measure is Measure.PAGERANK:
        return pagerank(window, damping, pagerank_tol, max_iter)
    if measure is Measure.ALPHA_CENTRALITY:
        return alpha_centrality(window, alpha_fraction)
    return {
        Measure.DEGREE: degree,
        Measure.DEGREE_ENTROPY: degree_entropy,
        Measure.CLUSTERING: clustering,
        Measure.BETWEENNESS: betweenness,
    }[measure](window)


def window_scores(window, measures=ALL_MEASURES, **settings):
    """All requested measures on one window, sharing a single graph build."""
    G = window_graph(window)
    G.graph["index"] = window.index
    return {Measure(m): compute_measure(G, m, **settings) for m in measures}


# ==========================================
# 4. TOP-K AGREEMENT
# ==========================================
def top_k(scores, k=TOP_K):
    return set(scores.ranked()[:k])


def jaccard_topk(scores_a, scores_b, k=TOP_K):
    if scores_a.window_index != scores_b.window_index:
        raise ValueError("scores come from different windows")
    if k < 1:
        raise ValueError("k must be >= 1")
    a, b = top_k(scores_a, k), top_k(scores_b, k)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def jaccard_matrix(scores_by_measure, k=TOP_K):
    """Pairwise top-k Jaccard for every unordered pair of measures, keyed 'a|b'."""
    measures = sorted(scores_by_measure, key=lambda m: ALL_MEASURES.index(Measure(m)))
    return {
        f"{Measure(a).value}|{Measure(b).value}": jaccard_topk(scores_by_measure[a], scores_by_measure[b], k)
        for a, b in itertools.combinations(measures, 2)
    }
