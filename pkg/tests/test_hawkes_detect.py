import itertools
import math

import numpy as np
import pandas as pd
import pytest
from scipy import integrate

from cascade_core import Cascade, HistoryGraph, ReshareEvent
from exceptions import CalibrationError, DegenerateCascadeError, TooShortError
from hawkes_detect import (REFERENCE_G_P, REFERENCE_TG_P, TYPE_I, TYPE_OTHER, Detection, HawkesCurve,
                           InhibitionCandidate, IntervalCurve, ReactionKernel, ThresholdParams,
                           alpha_sensitivity, calibrate_thresholds, detect_cascade, find_extrema,
                           finalize_inhibition, fit_poisson, hawkes_intensity, interval_curve,
                           interval_width, moving_mean_filter, reaction_times, resolve_thresholds)
from synthgen import SynthSpec, generate


def random_cascade(rng, n_events=60, n_nodes=25, cascade_id="r"):
    times = np.round(np.cumsum(rng.exponential(2.0, n_events)), 0) / 2.0
    times -= times[0]
    events = []
    for t in times:
        s, d = rng.choice(n_nodes, size=2, replace=False)
        events.append(ReshareEvent(f"n{s}", f"n{d}", float(t)))
    return Cascade(cascade_id, tuple(events))


def brute_force_intensity(cascade, history, kernel, p, alpha):
    """O(n^2) definition: every earlier event inside the window contributes."""
    events = cascade.events
    span = cascade.span
    seen = {}
    marks = []
    for e in events:
        seen.setdefault(e.source, set()).add(e.target)
        seen.setdefault(e.target, set()).add(e.source)
        marks.append(float(history.degree(e.source)) if e.source in history else float(len(seen[e.source])))
    out = []
    for j, ej in enumerate(events):
        dt = alpha * math.exp(ej.time / span)
        terms = [marks[i] * kernel.density(ej.time - events[i].time)
                 for i in range(j) if ej.time - events[i].time <= dt]
        out.append(p * math.fsum(terms))
    return np.array(out)


def scan_extrema(values):
    """Definition-based local extrema over interior indices."""
    n = len(values)
    maxima, minima = [], []
    for k in range(1, n - 1):
        around = [values[k + d] for d in (-3, -2, -1, 1, 2, 3) if 0 <= k + d < n]
        if all(values[k] > v for v in around):
            maxima.append(k)
        if all(values[k] < v for v in around):
            minima.append(k)
    return tuple(maxima), tuple(minima)


def curve(values, k_c=10.0):
    values = np.asarray(values, dtype=float)
    return IntervalCurve(k_c=k_c, starts=np.arange(len(values)) * k_c, values=values)


# ==========================================
# kernel
# ==========================================
def test_power_law_kernel_integrates_to_one():
    kernel = ReactionKernel()
    head, _ = integrate.quad(kernel.density, 0, kernel.s0)
    body, _ = integrate.quad(kernel.density, kernel.s0, 1e4, limit=500)
    tail = kernel.scale * kernel.s0 ** (1 + kernel.theta) * 1e4 ** (-kernel.theta) / kernel.theta
    assert head + body + tail == pytest.approx(1.0, abs=1e-3)
    assert np.all(kernel(np.linspace(0, 100, 50)) >= 0)


def test_vectorized_kernel_agrees_with_scalar():
    kernel = ReactionKernel(s0=3.0, theta=0.5)
    gaps = np.array([-1.0, 0.0, 1.0, 3.0, 7.5, 120.0])
    np.testing.assert_allclose(kernel(gaps), [kernel.density(g) for g in gaps], rtol=1e-14)


def test_empirical_kernel_from_reaction_times():
    cascade = Cascade("k", (ReshareEvent("a", "b", 0.0), ReshareEvent("b", "c", 3.0),
                            ReshareEvent("a", "d", 4.0)))
    np.testing.assert_allclose(reaction_times(cascade), [0.0, 3.0, 4.0])

    rng = np.random.default_rng(0)
    kernel = ReactionKernel.from_reaction_times(rng.exponential(20.0, 2000))
    widths = np.diff(kernel.edges)
    assert float(np.sum(np.asarray(kernel.heights) * widths)) == pytest.approx(1.0, abs=1e-9)
    assert kernel.density(1e9) == 0.0


def test_kernel_validation():
    with pytest.raises(ValueError):
        ReactionKernel(s0=0.0)
    with pytest.raises(ValueError):
        ReactionKernel(kind="gaussian")


# ==========================================
# step 1
# ==========================================
def test_first_event_has_zero_intensity():
    cascade = Cascade("k", (ReshareEvent("a", "b", 0.0), ReshareEvent("b", "c", 2.0)))
    h = hawkes_intensity(cascade, HistoryGraph.empty())
    assert h.intensities[0] == 0.0


def test_single_prior_event_gives_kernel_value():
    cascade = Cascade("k", (ReshareEvent("a", "b", 0.0), ReshareEvent("b", "c", 2.0)))
    kernel = ReactionKernel()
    h = hawkes_intensity(cascade, HistoryGraph.empty(), kernel, p=1.0)
    assert h.intensities[1] == kernel.density(2.0)


def test_history_degree_is_used_as_mark():
    cascade = Cascade("k", (ReshareEvent("a", "b", 0.0), ReshareEvent("b", "c", 8.0)))
    history = HistoryGraph.from_edges([("a", "x"), ("a", "y"), ("a", "z")])
    kernel = ReactionKernel()
    h = hawkes_intensity(cascade, history, kernel, p=1.0, alpha=10.0)
    assert h.intensities[1] == 3.0 * kernel.density(8.0)


def test_intensity_matches_brute_force_on_random_cascades():
    rng = np.random.default_rng(7)
    kernel = ReactionKernel()
    for trial in range(100):
        cascade = random_cascade(rng)
        history = HistoryGraph.from_edges(
            (f"n{u}", f"n{v}") for u, v in rng.integers(0, 40, size=(30, 2)) if u != v)
        fast = hawkes_intensity(cascade, history, kernel, p=1.0, alpha=5.0)
        slow = brute_force_intensity(cascade, history, kernel, 1.0, 5.0)
        assert np.array_equal(fast.intensities, slow), trial
        assert np.all(fast.intensities >= 0)


def test_scaling_p_scales_intensities():
    rng = np.random.default_rng(3)
    cascade = random_cascade(rng, n_events=120)
    base = hawkes_intensity(cascade, HistoryGraph.empty(), p=1.0)
    doubled = hawkes_intensity(cascade, HistoryGraph.empty(), p=2.0)
    np.testing.assert_array_equal(doubled.intensities, 2.0 * base.intensities)
    hi1 = interval_curve(base, cascade.span)
    hi2 = interval_curve(doubled, cascade.span)
    assert np.argmax(hi1.values) == np.argmax(hi2.values)


def test_zero_span_is_degenerate():
    cascade = Cascade("k", (ReshareEvent("a", "b", 0.0), ReshareEvent("a", "c", 0.0)))
    with pytest.raises(DegenerateCascadeError):
        hawkes_intensity(cascade, HistoryGraph.empty())


# ==========================================
# step 2
# ==========================================
def test_interval_width_formula():
    assert interval_width(math.exp(10), alpha=5) == pytest.approx(50.0, rel=1e-12)
    with pytest.raises(DegenerateCascadeError):
        interval_width(1.0)


def test_interval_curve_manual_binning():
    k_c = interval_width(20.0, alpha=1.0)
    times = np.array([0.1, 0.5, 1.5, 3.2, 6.6]) * k_c
    hi = interval_curve(HawkesCurve(times, np.array([1.0, 2.0, 3.0, 4.0, 5.0])), 20.0, alpha=1.0)
    assert len(hi) == 7
    np.testing.assert_array_equal(hi.values, [3.0, 3.0, 0.0, 4.0, 0.0, 0.0, 5.0])
    np.testing.assert_allclose(hi.starts, np.arange(7) * k_c)


def test_interval_curve_conserves_mass():
    rng = np.random.default_rng(11)
    for _ in range(100):
        cascade = random_cascade(rng, n_events=200)
        h = hawkes_intensity(cascade, HistoryGraph.empty())
        hi = interval_curve(h, cascade.span)
        assert hi.mass() == math.fsum(h.intensities)
        assert sorted(itertools.chain.from_iterable(hi.partials)) == sorted(h.intensities.tolist())
        assert [math.fsum(p) for p in hi.partials] == hi.values.tolist()
        assert math.fsum(hi.values) == pytest.approx(hi.mass(), rel=1e-12, abs=1e-300)


def test_extrema_of_increasing_curve():
    ex = find_extrema(curve(np.arange(10.0)))
    assert ex.steep_index == 9
    assert ex.minima == () and ex.maxima == ()


def test_extrema_of_triangle():
    ex = find_extrema(curve([0, 1, 2, 3, 4, 3, 2, 1, 0]))
    assert ex.steep_index == 4
    assert ex.minima == ()
    assert ex.maxima == (4,)


def test_steep_ties_resolve_to_earliest():
    assert find_extrema(curve([0, 5, 1, 0, 1, 5, 0, 2])).steep_index == 1


def test_extrema_match_exhaustive_scan():
    rng = np.random.default_rng(5)
    for _ in range(200):
        values = rng.integers(0, 6, size=int(rng.integers(7, 40))).astype(float)
        ex = find_extrema(curve(values))
        maxima, minima = scan_extrema(values)
        assert ex.maxima == maxima
        assert ex.minima == minima
        assert ex.steep_index == int(np.argmax(values))


def test_too_few_intervals():
    with pytest.raises(TooShortError):
        find_extrema(curve([1, 2, 3, 2, 1, 2]))


def test_moving_mean_keeps_dip_below_plateau():
    hi = curve([5, 5, 5, 1, 5, 5, 5, 5])
    kept, flagged = moving_mean_filter(hi, (3,), delta_k=30.0)
    assert kept == (3,) and flagged == ()


def test_moving_mean_drops_minimum_equal_to_mean():
    hi = curve([3, 6, 3, 4, 9, 9, 9, 9])
    kept, _ = moving_mean_filter(hi, (3,), delta_k=30.0)
    assert kept == ()


def test_leading_minimum_is_kept_and_flagged():
    hi = curve([1, 4, 6, 8, 6, 4, 2, 5, 7, 9])
    assert find_extrema(hi).minima == (6,)
    kept, flagged = moving_mean_filter(hi, (0, 6), delta_k=30.0)
    assert kept == (0, 6)
    assert flagged == (0,)


def test_moving_mean_matches_direct_recomputation():
    rng = np.random.default_rng(9)
    values = rng.gamma(2.0, 3.0, size=60)
    hi = curve(values, k_c=7.0)
    minima = find_extrema(hi).minima
    kept, _ = moving_mean_filter(hi, minima, delta_k=50.0)
    w = math.ceil(50.0 / 7.0)
    expected = tuple(k for k in minima if values[k] < np.mean(values[max(0, k - w):k]))
    assert kept == expected


# ==========================================
# step 3
# ==========================================
def test_poisson_fit_simple_pools():
    assert fit_poisson([3, 3, 3]) == 3.0
    assert fit_poisson([1, 2, 3]) == pytest.approx(2.0, abs=1e-4)
    with pytest.raises(CalibrationError):
        fit_poisson([])


def test_poisson_fit_equals_sample_mean():
    rng = np.random.default_rng(21)
    for _ in range(50):
        pool = rng.poisson(rng.uniform(2, 50), size=int(rng.integers(5, 60)))
        assert fit_poisson(pool) == pytest.approx(np.mean(pool), rel=1e-4)
    for _ in range(50):
        pool = rng.uniform(1.0, 9.0, size=int(rng.integers(5, 60)))
        assert fit_poisson(pool) == pytest.approx(np.mean(pool), rel=1e-4)


def detection(cid, t_steep, pairs):
    cands = tuple(InhibitionCandidate(t_steep + gap, gap, g) for gap, g in pairs)
    return Detection(cid, k_c=40.0, steep_index=0, t_steep=t_steep, candidates=cands)


def test_calibration_pools_candidates():
    detections = [detection("a", 100.0, [(1000.0, 2.0), (3000.0, 4.0)]), detection("b", 50.0, [(2000.0, 3.0)])]
    params = calibrate_thresholds(detections)
    assert params.tg_p == pytest.approx(2000.0, rel=1e-4)
    assert params.g_p == pytest.approx(3.0, rel=1e-4)
    with pytest.raises(CalibrationError):
        calibrate_thresholds([detection("c", 10.0, [])])


def test_resolve_thresholds_fallbacks():
    params, source = resolve_thresholds([detection("c", 10.0, [])])
    assert (params.tg_p, params.g_p, source) == (REFERENCE_TG_P, REFERENCE_G_P, "reference")
    params, source = resolve_thresholds([], tg_p=10.0, g_p=2.0)
    assert (params.tg_p, params.g_p, source) == (10.0, 2.0, "configured")


def test_finalize_selects_first_qualifying_candidate():
    params = ThresholdParams.fixed(REFERENCE_TG_P, REFERENCE_G_P)
    cands = (InhibitionCandidate(5100.0, 5000.0, 5.0),)
    ev = finalize_inhibition("k", 100.0, cands, params)
    assert ev.t_inhib == 5100.0
    assert ev.cascade_type == TYPE_I


def test_finalize_without_qualifying_candidate():
    params = ThresholdParams.fixed(REFERENCE_TG_P, REFERENCE_G_P)
    cands = (InhibitionCandidate(4100.0, 4000.0, 5.0), InhibitionCandidate(6100.0, 6000.0, 3.0))
    ev = finalize_inhibition("k", 100.0, cands, params)
    assert ev.t_inhib is None and ev.flagged


def test_late_steep_is_not_type_one():
    params = ThresholdParams.fixed(REFERENCE_TG_P, REFERENCE_G_P)
    assert finalize_inhibition("k", 6000.0, (), params).cascade_type == TYPE_OTHER


def test_threshold_params_must_be_positive():
    with pytest.raises(ValueError):
        ThresholdParams.fixed(0.0, 1.0)


# ==========================================
# planted events
# ==========================================
def test_planted_steep_recovered():
    rng = np.random.default_rng(2024)
    hits, detections, planted = 0, [], []
    for seed in range(200):
        t_steep = float(rng.uniform(100.0, 1500.0))
        t_inhib = t_steep + float(rng.uniform(500.0, 2000.0))
        result = generate(SynthSpec(seed=seed, cascade_id=f"p{seed}", t_steep=t_steep, t_inhib=t_inhib))
        d = detect_cascade(result.cascade, result.history)
        hits += abs(d.t_steep - t_steep) <= d.k_c
        detections.append(d)
        planted.append(t_steep)
    assert hits >= 180

    params, _ = resolve_thresholds(detections)
    finalized = []
    for d in detections:
        ev = finalize_inhibition(d.cascade_id, d.t_steep, d.candidates, params, k_c=d.k_c)
        if ev.t_inhib is not None:
            finalized.append(ev)
    assert len(finalized) >= 1
    assert all(ev.t_inhib > ev.t_steep for ev in finalized)


# ==========================================
# alpha sweep
# ==========================================
@pytest.fixture(scope="module")
def small_corpus():
    results = [generate(SynthSpec(seed=s, cascade_id=f"s{s}")) for s in range(6)]
    history = HistoryGraph.from_edges(
        [e for r in results for e in r.history.edges], [n for r in results for n in r.history.nodes])
    return [r.cascade for r in results], history


def test_single_alpha_reproduces_calibration(small_corpus):
    cascades, history = small_corpus
    table = alpha_sensitivity(cascades, history, alpha_grid=[5])
    detections = [detect_cascade(c, history, alpha=5) for c in cascades]
    params = calibrate_thresholds(detections)
    assert len(table) == 1
    assert table.loc[0, "beta_tg"] == params.beta_tg
    assert table.loc[0, "beta_g"] == params.beta_g
    assert table.loc[0, "n_skipped"] == 0


def test_alpha_sweep_is_deterministic(small_corpus):
    cascades, history = small_corpus
    first = alpha_sensitivity(cascades, history, alpha_grid=[1, 5, 15])
    second = alpha_sensitivity(cascades, history, alpha_grid=[1, 5, 15])
    pd.testing.assert_frame_equal(first, second, check_exact=True)
    assert list(first["alpha"]) == [1.0, 5.0, 15.0]
    with pytest.raises(ValueError):
        alpha_sensitivity(cascades, history, alpha_grid=[])
