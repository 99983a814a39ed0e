"""
Cascade Lifecycle: Synthetic Cascade Generator
Seeded cascades with known ground truth.

    hawkes-thinning   self-exciting reshares simulated by Ogata thinning with the
                      detector's reaction-time kernel and history-degree marks
    planted-logistic  logistic burst centred on t_steep*, a plateau up to
                      t_inhib* and an exponential decay afterwards
    var-coupled       paired (feature, response) series from a known VAR

History graphs use a discrete power-law degree sequence wired by the
configuration model.
"""

import logging
from dataclasses import asdict, dataclass, field

import networkx as nx
import numpy as np
import pandas as pd

from cascade_core import Cascade, HistoryGraph, ReshareEvent
from exceptions import SpecError
from hawkes_detect import KERNEL_S0, KERNEL_THETA, ReactionKernel

logger = logging.getLogger(__name__)

# ==========================================
# 1. DEFAULTS
# ==========================================
MODES = ("hawkes-thinning", "planted-logistic", "var-coupled")
N_EVENTS = 400
PLANTED_STEEP = 200.0
PLANTED_INHIB = 900.0
BURST_SCALE = 15.0           # logistic scale of the burst (minutes)
BURST_SHARE = 0.50
PLATEAU_SHARE = 0.35         # the rest decays after t_inhib*
TAIL_DROP = 0.3              # tail rate at t_inhib* relative to the plateau rate
DEGREE_EXPONENT = 2.5
TIME_DECIMALS = 6


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    mode: str = "planted-logistic"
    cascade_id: str = "c000"
    n_events: int = N_EVENTS
    node_budget: int = 2 * N_EVENTS
    kernel_s0: float = KERNEL_S0
    kernel_theta: float = KERNEL_THETA
    t_steep: float = PLANTED_STEEP
    t_inhib: float = PLANTED_INHIB
    burst_scale: float = BURST_SCALE
    degree_exponent: float = DEGREE_EXPONENT
    # hawkes-thinning
    infectiousness: float = 0.3
    horizon: float = 1e7
    # var-coupled
    var_points: int = 300
    var_b1: float = 0.8
    var_a1: float = 0.0
    var_phi: float = 0.5
    var_noise: float = 0.1

    def validate(self):
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}")
        if self.mode == "var-coupled":
            if self.var_points < 3:
                raise SpecError("var-coupled needs at least 3 points")
            return
        if not 0 < self.t_steep < self.t_inhib:
            raise SpecError(f"planted times need 0 < t_steep < t_inhib, got {self.t_steep}, {self.t_inhib}")
        if self.n_events < 2:
            raise SpecError("a cascade needs at least 2 events")
        if self.node_budget < self.n_events + 1:
            raise SpecError(f"node budget {self.node_budget} cannot host {self.n_events} events")
        if self.degree_exponent <= 1:
            raise SpecError("power-law degree exponent must exceed 1")


@dataclass
class SynthResult:
    cascade: Cascade
    history: HistoryGraph
    truth: dict
    series: pd.DataFrame = None
    parents: list = field(default_factory=list)


def node_name(cascade_id, k):
    return f"{cascade_id}_u{k:04d}"


# ==========================================
# 2. HISTORY GRAPH
# ==========================================
def powerlaw_history(nodes, exponent, rng):
    """Configuration-model graph with Zipf degrees capped at n - 1, loops and multi-edges dropped."""
    n = len(nodes)
    if n < 2:
        return HistoryGraph.from_edges([], nodes)
    degrees = np.minimum(rng.zipf(exponent, n), n - 1)
    if degrees.sum() % 2:
        degrees[int(np.argmax(degrees))] -= 1
    multigraph = nx.configuration_model(degrees.tolist(), seed=int(rng.integers(2 ** 31)))
    G = nx.Graph(multigraph)
    G.remove_edges_from(list(nx.selfloop_edges(G)))
    pairs = [(nodes[u], nodes[v]) for u, v in G.edges]
    return HistoryGraph.from_edges(pairs, nodes)


# ==========================================
# 3. MODES
# ==========================================
def _planted_times(spec, rng):
    """First event at 0; burst, plateau and tail drawn as a three-part mixture."""
    n = spec.n_events - 1
    n_burst = int(round(BURST_SHARE * n))
    n_plateau = int(round(PLATEAU_SHARE * n))
    n_tail = n - n_burst - n_plateau
    # tail rate at t_inhib* is TAIL_DROP times the plateau rate
    plateau_rate = n_plateau / spec.t_inhib
    tau = n_tail / (TAIL_DROP * plateau_rate) if n_plateau else spec.t_inhib

    burst = np.abs(rng.logistic(spec.t_steep, spec.burst_scale, n_burst))
    plateau = rng.uniform(0.0, spec.t_inhib, n_plateau)
    tail = spec.t_inhib + rng.exponential(tau, n_tail)
    times = np.sort(np.concatenate([[0.0], burst, plateau, tail]))
    return np.round(times, TIME_DECIMALS)


def _planted_logistic(spec, rng):
    nodes = [node_name(spec.cascade_id, k) for k in range(spec.node_budget)]
    times = _planted_times(spec, rng)
    degree = np.zeros(spec.node_budget)
    events = []
    for k, t in enumerate(times):
        weights = degree[:k + 1] + 1.0
        src = int(rng.choice(k + 1, p=weights / weights.sum()))
        events.append(ReshareEvent(nodes[src], nodes[k + 1], float(t)))
        degree[src] += 1
        degree[k + 1] += 1
    history = powerlaw_history(nodes[:spec.n_events + 1], spec.degree_exponent, rng)
    truth = {"t_steep": spec.t_steep, "t_inhib": spec.t_inhib}
    return Cascade(spec.cascade_id, tuple(events)), history, truth, []


def _hawkes_thinning(spec, rng):
    """
    Ogata thinning. h is nonincreasing, so the intensity just after the latest
    event (or rejected proposal) bounds it until the next event.
    """
    kernel = ReactionKernel(s0=spec.kernel_s0, theta=spec.kernel_theta)
    nodes = [node_name(spec.cascade_id, k) for k in range(spec.node_budget)]
    history = powerlaw_history(nodes, spec.degree_exponent, rng)
    marks_of = np.array([history.degree(v) for v in nodes], dtype=float)

    times = [0.0]
    sources = [0]
    targets = [1]
    parents = [-1]
    p = spec.infectiousness

    def contributions(t):
        return p * marks_of[sources] * kernel(t - np.asarray(times))

    t = 0.0
    bound = float(contributions(t).sum())
    while len(times) < spec.n_events and bound > 0:
        t += rng.exponential(1.0 / bound)
        if t > spec.horizon:
            break
        parts = contributions(t)
        rate = float(parts.sum())
        if rng.uniform() * bound <= rate:
            parent = int(rng.choice(len(parts), p=parts / rate))
            times.append(round(t, TIME_DECIMALS))
            sources.append(targets[parent])
            targets.append(len(targets) + 1)
            parents.append(parent)
            rate += p * marks_of[sources[-1]] * kernel.scale
        bound = rate

    events = tuple(ReshareEvent(nodes[s], nodes[g], float(t)) for s, g, t in zip(sources, targets, times))
    truth = {"n_events": len(events), "infectiousness": p}
    return Cascade(spec.cascade_id, events), history, truth, parents


def _var_coupled(spec, rng):
    """x_t = a1 x_{t-1} + b1 y_{t-1} + noise e_t,  y_t = phi y_{t-1} + u_t."""
    n = spec.var_points
    u = rng.standard_normal(n)
    e = rng.standard_normal(n)
    x = np.zeros(n)
    y = np.zeros(n)
    y[0] = u[0]
    for t in range(1, n):
        y[t] = spec.var_phi * y[t - 1] + u[t]
        x[t] = spec.var_a1 * x[t - 1] + spec.var_b1 * y[t - 1] + spec.var_noise * e[t]
    truth = {"b1": spec.var_b1, "a1": spec.var_a1, "phi": spec.var_phi, "noise": spec.var_noise}
    return pd.DataFrame({"x": x, "y": y}), truth


# ==========================================
# 4. ENTRY POINTS
# ==========================================
def generate(spec):
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    base = {"id": spec.cascade_id, "mode": spec.mode, "seed": spec.seed}
    if spec.mode == "var-coupled":
        series, truth = _var_coupled(spec, rng)
        return SynthResult(cascade=None, history=HistoryGraph.empty(), truth={**base, **truth}, series=series)
    builder = _planted_logistic if spec.mode == "planted-logistic" else _hawkes_thinning
    cascade, history, truth, parents = builder(spec, rng)
    return SynthResult(cascade=cascade, history=history, truth={**base, **truth}, parents=parents)


def simulate_corpus(n, spec):
    """n cascades with ids c000, c001, ... and seeds spec.seed + i."""
    if n < 1:
        raise SpecError("corpus size must be >= 1")
    params = asdict(spec)
    results = []
    for i in range(n):
        params.update(seed=spec.seed + i, cascade_id=f"c{i:03d}")
        results.append(generate(SynthSpec(**params)))
    logger.info("simulated %d %s cascades", n, spec.mode)
    return results


def merge_histories(results):
    nodes, edges = set(), set()
    for r in results:
        nodes |= r.history.nodes
        edges |= r.history.edges
    return HistoryGraph(frozenset(nodes), frozenset(edges))
