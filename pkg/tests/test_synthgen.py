import math

import numpy as np
import pytest

from cascade_core import ingest_cascades, write_event_log
from exceptions import SpecError
from hawkes_detect import ReactionKernel, interval_width
from synthgen import SynthSpec, generate, merge_histories, simulate_corpus


def test_same_seed_same_output():
    for mode in ("planted-logistic", "hawkes-thinning"):
        a = generate(SynthSpec(seed=11, mode=mode))
        b = generate(SynthSpec(seed=11, mode=mode))
        assert a.cascade == b.cascade
        assert a.history.edges == b.history.edges
        assert a.truth == b.truth
    va = generate(SynthSpec(seed=3, mode="var-coupled"))
    vb = generate(SynthSpec(seed=3, mode="var-coupled"))
    assert va.series.equals(vb.series)


def test_planted_burst_peaks_at_planted_time():
    result = generate(SynthSpec(seed=0, t_steep=200.0, t_inhib=900.0, n_events=400))
    times = result.cascade.times
    assert result.cascade.size == 400
    assert np.all(np.diff(times) >= 0)
    k_c = interval_width(result.cascade.span)
    bins = np.floor(times / k_c).astype(int)
    counts = np.bincount(bins)
    assert abs(int(np.argmax(counts)) - int(200.0 // k_c)) <= 1
    assert result.truth["t_steep"] == 200.0


def test_var_recursion_exact_without_noise():
    result = generate(SynthSpec(seed=5, mode="var-coupled", var_noise=0.0, var_b1=0.8, var_points=300))
    x, y = result.series["x"].to_numpy(), result.series["y"].to_numpy()
    assert result.cascade is None
    np.testing.assert_array_equal(x[1:], 0.0 * x[:-1] + 0.8 * y[:-1])


def test_thinning_offspring_gaps_follow_kernel():
    kernel = ReactionKernel()
    edges = [0.0, 5.0, 50.0, 500.0]
    gaps = []
    for seed in range(1500):
        result = generate(SynthSpec(seed=seed, mode="hawkes-thinning", n_events=50, node_budget=60))
        times = result.cascade.times
        gaps.extend(times[k] - times[parent] for k, parent in enumerate(result.parents) if parent >= 0)
    gaps = np.asarray(gaps)
    gaps = gaps[gaps < edges[-1]]
    assert gaps.size > 500

    tail = kernel.scale * kernel.s0 ** (1 + kernel.theta) / kernel.theta
    mass = [kernel.scale * kernel.s0] + [tail * (a ** -kernel.theta - b ** -kernel.theta)
                                         for a, b in zip(edges[1:], edges[2:])]
    expected = np.array(mass) / math.fsum(mass)
    observed = np.histogram(gaps, bins=edges)[0] / gaps.size
    np.testing.assert_allclose(observed, expected, rtol=0.15)


def test_thinning_records_parents():
    result = generate(SynthSpec(seed=2, mode="hawkes-thinning", infectiousness=0.5))
    assert result.parents[0] == -1
    assert all(0 <= p < k for k, p in enumerate(result.parents) if k)
    assert result.truth["n_events"] == result.cascade.size
    sources = [e.source for e in result.cascade.events]
    targets = [e.target for e in result.cascade.events]
    for k, parent in enumerate(result.parents):
        if parent >= 0:
            assert sources[k] == targets[parent]


@pytest.mark.parametrize("kwargs", [
    {"t_steep": 900.0, "t_inhib": 200.0},
    {"t_steep": 0.0},
    {"node_budget": 10},
    {"mode": "poisson"},
    {"mode": "var-coupled", "var_points": 2},
    {"degree_exponent": 1.0},
])
def test_infeasible_specs(kwargs):
    with pytest.raises(SpecError):
        generate(SynthSpec(**kwargs))


def test_emitted_cascades_pass_ingestion(tmp_path):
    results = simulate_corpus(3, SynthSpec(seed=7))
    path = tmp_path / "events.csv"
    write_event_log([r.cascade for r in results], str(path))
    report = ingest_cascades(str(path), min_size=1)
    assert report.row_errors == []
    assert report.cascades == [r.cascade for r in results]


def test_simulated_corpus_ids_and_history():
    results = simulate_corpus(4, SynthSpec(seed=20, n_events=50, node_budget=60))
    assert [r.cascade.id for r in results] == ["c000", "c001", "c002", "c003"]
    assert [r.truth["seed"] for r in results] == [20, 21, 22, 23]
    merged = merge_histories(results)
    assert merged.edges == frozenset().union(*(r.history.edges for r in results))
    with pytest.raises(SpecError):
        simulate_corpus(0, SynthSpec())
