"""
Cascade Lifecycle: Steep / Inhibition Detector
Three-step identification of the steep and inhibition intervals of a cascade.

    Step 1. Hawkes intensity H[t] at every reshare, from a reaction-time kernel
            weighted by the source's degree.
    Step 2. Interval curve HI (sum of H over bins of width K_C = alpha * ln T_C),
            local extrema within a +/-3 interval neighbourhood, and a moving-mean
            filter on the minima. The global maximum of HI is the steep interval;
            surviving minima after it are inhibition candidates.
    Step 3. Poisson fits of the candidate time gaps and growth ratios across the
            corpus give thresholds (TG_p, g_p); the first candidate above both is
            the inhibition interval.

Event times are reported as interval midpoints.
"""

import bisect
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from exceptions import CalibrationError, DegenerateCascadeError, LifecycleError, TooShortError
from stats_num import moving_mean, nelder_mead, poisson_nll

logger = logging.getLogger(__name__)

# ==========================================
# 1. DETECTOR DEFAULTS
# ==========================================
ALPHA = 5.0                 # scaling factor for K_C and the Hawkes window
INFECTIOUSNESS = 1.0        # p, held constant
KERNEL_S0 = 5.0             # minutes, flat part of the reaction-time kernel
KERNEL_THETA = 0.242        # power-law tail exponent
DELTA_K = 300.0             # moving-mean lookback (minutes)
T_TH = 5000.0               # Type I cutoff on t_steep (minutes)
NEIGHBOURHOOD = (1, 2, 3)   # offsets for local extrema
MIN_INTERVALS = 7
ALPHA_GRID = (1, 3, 5, 7, 10, 15)

# Thresholds calibrated on a large microblog corpus; used only when nothing can be calibrated
REFERENCE_TG_P = 4171.25
REFERENCE_G_P = 4.25

TYPE_I = "TypeI"
TYPE_OTHER = "Other"


# ==========================================
# 2. REACTION-TIME KERNEL
# ==========================================
@dataclass(frozen=True)
class ReactionKernel:
    """
    Probability density of the delay between a node joining and resharing.

    power_law:  c on [0, s0), c (s0 / t)^(1 + theta) on [s0, inf),
                c = theta / (s0 (1 + theta)) so the density integrates to 1.
    empirical:  normalized histogram of observed reaction times, 0 outside.
    """
    kind: str = "power_law"
    s0: float = KERNEL_S0
    theta: float = KERNEL_THETA
    edges: tuple = ()
    heights: tuple = ()

    def __post_init__(self):
        if self.kind == "power_law":
            if not (self.s0 > 0 and self.theta > 0):
                raise ValueError(f"power-law kernel needs s0 > 0 and theta > 0, got {self.s0}, {self.theta}")
        elif self.kind == "empirical":
            if len(self.edges) != len(self.heights) + 1 or not self.heights:
                raise ValueError("empirical kernel needs len(edges) == len(heights) + 1")
            if min(self.heights) < 0:
                raise ValueError("empirical kernel heights must be nonnegative")
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def from_reaction_times(cls, gaps, bins="auto"):
        gaps = np.asarray(gaps, dtype=float)
        gaps = gaps[np.isfinite(gaps) & (gaps >= 0)]
        if gaps.size == 0:
            raise ValueError("no reaction times to fit")
        lo, hi = 0.0, float(gaps.max())
        if hi <= lo:
            hi = 1.0
        heights, edges = np.histogram(gaps, bins=bins, range=(lo, hi), density=True)
        return cls(kind="empirical", edges=tuple(float(e) for e in edges),
                   heights=tuple(float(h) for h in heights))

    @property
    def scale(self):
        return self.theta / (self.s0 * (1.0 + self.theta))

    def density(self, gap):
        """Scalar density h(gap)."""
        if gap < 0:
            return 0.0
        if self.kind == "power_law":
            if gap < self.s0:
                return self.scale
            return self.scale * math.pow(self.s0 / gap, 1.0 + self.theta)
        if gap > self.edges[-1]:
            return 0.0
        k = min(bisect.bisect_right(self.edges, gap) - 1, len(self.heights) - 1)
        return self.heights[k]

    def __call__(self, gaps):
        """Vectorized h over an array of gaps."""
        g = np.atleast_1d(np.asarray(gaps, dtype=float))
        if self.kind == "power_law":
            tail = self.scale * (self.s0 / np.maximum(g, self.s0)) ** (1.0 + self.theta)
            return np.where(g < 0, 0.0, tail)
        edges = np.asarray(self.edges)
        k = np.clip(np.searchsorted(edges, g, side="right") - 1, 0, len(self.heights) - 1)
        inside = (g >= 0) & (g <= edges[-1])
        return np.where(inside, np.asarray(self.heights)[k], 0.0)


def reaction_times(cascade):
    """Delay of each reshare after its source joined (roots join at time 0)."""
    joined = {}
    gaps = []
    for e in cascade.events:
        start = joined.get(e.source, 0.0)
        gaps.append(e.time - start)
        joined.setdefault(e.target, e.time)
    return np.asarray(gaps, dtype=float)


# ==========================================
# 3. DATA STRUCTURES
# ==========================================
@dataclass(frozen=True)
class HawkesCurve:
    times: np.ndarray
    intensities: np.ndarray


@dataclass(frozen=True)
class IntervalCurve:
    k_c: float
    starts: np.ndarray
    values: np.ndarray
    # point intensities that fell in each interval; values[k] == fsum(partials[k])
    partials: tuple = ()

    def __len__(self):
        return len(self.values)

    def mass(self):
        """Correctly rounded total over every binned point (falls back to the interval values)."""
        terms = itertools.chain.from_iterable(self.partials) if self.partials else self.values
        return math.fsum(terms)

    def midpoint(self, index):
        return float(self.starts[index] + 0.5 * self.k_c)


@dataclass(frozen=True)
class Extrema:
    steep_index: int
    minima: tuple
    maxima: tuple


@dataclass(frozen=True)
class InhibitionCandidate:
    time: float          # interval midpoint
    gap: float           # Delta TG = time - t_steep
    growth: float        # g = S[candidate] / S[steep]


@dataclass(frozen=True)
class Detection:
    """Output of steps 1 and 2 for one cascade."""
    cascade_id: str
    k_c: float
    steep_index: int
    t_steep: float
    candidates: tuple


@dataclass(frozen=True)
class ThresholdParams:
    tg_p: float
    g_p: float
    beta_tg: float
    beta_g: float

    def __post_init__(self):
        for name in ("tg_p", "g_p", "beta_tg", "beta_g"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")

    @classmethod
    def fixed(cls, tg_p, g_p):
        return cls(tg_p=tg_p, g_p=g_p, beta_tg=tg_p, beta_g=g_p)


@dataclass(frozen=True)
class EventTimes:
    cascade_id: str
    t_steep: float
    candidates: tuple
    t_inhib: float = None
    cascade_type: str = TYPE_OTHER
    k_c: float = None

    @property
    def flagged(self):
        return self.t_inhib is None

    def to_record(self):
        return {
            "id": self.cascade_id,
            "t_steep": self.t_steep,
            "candidates": [c.time for c in self.candidates],
            "t_inhib": self.t_inhib,
            "type": self.cascade_type,
            "k_c": self.k_c,
        }


@dataclass
class CorpusDetection:
    detections: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)     # cascade id -> reason


# ==========================================
# 4. STEP 1: HAWKES INTENSITY
# ==========================================
def _degree_marks(cascade, history):
    """n_i: history degree of the source, else its cascade degree so far."""
    neighbours = {}
    marks = np.empty(cascade.size, dtype=float)
    for i, e in enumerate(cascade.events):
        neighbours.setdefault(e.source, set()).add(e.target)
        neighbours.setdefault(e.target, set()).add(e.source)
        if e.source in history:
            marks[i] = history.degree(e.source)
        else:
            marks[i] = len(neighbours[e.source])
    return marks


def hawkes_window(alpha, t, span):
    """Delta t = alpha * exp(t / T_C)."""
    return alpha * math.exp(t / span)


def hawkes_intensity(cascade, history, kernel=None, p=INFECTIOUSNESS, alpha=ALPHA):
    """
    H[t_j] = p * sum_{i<j, t_j - t_i <= Delta t_j} n_i h(t_j - t_i).

    Only the events inside the window are visited; sums use math.fsum so the
    result does not depend on summation order.
    """
    if not p > 0:
        raise ValueError("infectiousness p must be > 0")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    kernel = kernel or ReactionKernel()
    span = cascade.span
    if span <= 0:
        raise DegenerateCascadeError(f"cascade {cascade.id} has zero span")

    times = cascade.times
    marks = _degree_marks(cascade, history)
    out = np.zeros(cascade.size)
    for j in range(1, cascade.size):
        t_j = times[j]
        dt = hawkes_window(alpha, t_j, span)
        lo = int(np.searchsorted(times, t_j - dt, side="left"))
        while lo > 0 and t_j - times[lo - 1] <= dt:
            lo -= 1
        terms = [marks[i] * kernel.density(t_j - times[i])
                 for i in range(lo, j) if t_j - times[i] <= dt]
        out[j] = p * math.fsum(terms)
    return HawkesCurve(times=times.copy(), intensities=out)


# ==========================================
# 5. STEP 2: INTERVAL CURVE AND EXTREMA
# ==========================================
def interval_width(span, alpha=ALPHA):
    if span <= 1:
        raise DegenerateCascadeError(f"T_C = {span} <= 1 gives no positive interval width")
    return alpha * math.log(span)


def interval_curve(curve, span, alpha=ALPHA):
    """Sum point intensities over [start, start + K_C) tiling [0, T_C]."""
    k_c = interval_width(span, alpha)
    n = max(1, math.ceil(span / k_c))
    index = np.minimum(np.floor(curve.times / k_c).astype(int), n - 1)
    partials = tuple(tuple(curve.intensities[index == k].tolist()) for k in range(n))
    values = np.array([math.fsum(p) for p in partials])
    return IntervalCurve(k_c=k_c, starts=np.arange(n) * k_c, values=values, partials=partials)


def _is_extremum(values, k, sign):
    n = len(values)
    for d in NEIGHBOURHOOD:
        for j in (k - d, k + d):
            if 0 <= j < n and not sign * (values[k] - values[j]) > 0:
                return False
    return True


def find_extrema(hi):
    """
    Steep index = first argmax of HI. Interior local maxima / minima are strict
    against every neighbour at offsets 1..3 (truncated at the boundaries).
    """
    values = hi.values if isinstance(hi, IntervalCurve) else np.asarray(hi, dtype=float)
    n = len(values)
    if n < MIN_INTERVALS:
        raise TooShortError(f"{n} intervals, need at least {MIN_INTERVALS}")
    maxima = tuple(k for k in range(1, n - 1) if _is_extremum(values, k, +1))
    minima = tuple(k for k in range(1, n - 1) if _is_extremum(values, k, -1))
    return Extrema(steep_index=int(np.argmax(values)), minima=minima, maxima=maxima)


def moving_mean_filter(hi, minima, delta_k=DELTA_K):
    """
    Keep a minimum k iff HI[k] < mean of the previous w = ceil(Delta k / K_C)
    intervals. Minima with an empty lookback are kept and returned as flagged.
    """
    if not delta_k > 0:
        raise ValueError("delta_k must be > 0")
    w = math.ceil(delta_k / hi.k_c)
    mean = moving_mean(hi.values, w)
    kept, no_lookback = [], []
    for k in minima:
        if k == 0:
            kept.append(k)
            no_lookback.append(k)
        elif hi.values[k] < mean[k]:
            kept.append(k)
    return tuple(kept), tuple(no_lookback)


def inhibition_candidates(cascade, hi, steep_index, minima):
    """Candidates after the steep interval, with their time gap and growth ratio."""
    times = cascade.times
    steep_size = np.searchsorted(times, hi.starts[steep_index], side="right")
    t_steep = hi.midpoint(steep_index)
    found = []
    for k in minima:
        t = hi.midpoint(k)
        if t <= t_steep:
            continue
        size = np.searchsorted(times, hi.starts[k], side="right")
        found.append(InhibitionCandidate(time=t, gap=t - t_steep, growth=float(size) / steep_size))
    return tuple(found)


def detect_cascade(cascade, history, kernel=None, p=INFECTIOUSNESS, alpha=ALPHA, delta_k=DELTA_K):
    """Steps 1 and 2 for one cascade."""
    curve = hawkes_intensity(cascade, history, kernel, p, alpha)
    hi = interval_curve(curve, cascade.span, alpha)
    extrema = find_extrema(hi)
    filtered, _ = moving_mean_filter(hi, extrema.minima, delta_k)
    return Detection(
        cascade_id=cascade.id,
        k_c=hi.k_c,
        steep_index=extrema.steep_index,
        t_steep=hi.midpoint(extrema.steep_index),
        candidates=inhibition_candidates(cascade, hi, extrema.steep_index, filtered),
    )


def detect_corpus(cascades, history, kernel=None, p=INFECTIOUSNESS, alpha=ALPHA, delta_k=DELTA_K):
    result = CorpusDetection()
    for cascade in cascades:
        try:
            result.detections.append(detect_cascade(cascade, history, kernel, p, alpha, delta_k))
        except LifecycleError as err:
            logger.warning("cascade %s skipped by detector: %s", cascade.id, err)
            result.skipped[cascade.id] = type(err).__name__
    return result


# ==========================================
# 6. STEP 3: THRESHOLDS
# ==========================================
def fit_poisson(values):
    """Poisson rate by Nelder-Mead on the negative log-likelihood, started at the sample mean."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise CalibrationError("empty pool")
    start = float(np.mean(values))
    if np.all(values == values[0]):
        return float(values[0])
    res = nelder_mead(lambda b: poisson_nll(b, values), [start])
    if not res.converged:
        logger.warning("Poisson fit did not converge, using best vertex %.6g", res.x[0])
    return float(res.x[0])


def calibrate_thresholds(detections):
    """Pool Delta TG and g over every candidate of the corpus and fit each to a Poisson."""
    gaps = [c.gap for d in detections for c in d.candidates]
    growth = [c.growth for d in detections for c in d.candidates]
    if not gaps:
        raise CalibrationError("no inhibition candidates in the corpus")
    beta_tg = fit_poisson(gaps)
    beta_g = fit_poisson(growth)
    logger.info("calibrated thresholds on %d candidates: TG_p=%.4f g_p=%.4f",
                len(gaps), beta_tg, beta_g)
    return ThresholdParams(tg_p=beta_tg, g_p=beta_g, beta_tg=beta_tg, beta_g=beta_g)


def finalize_inhibition(cascade_id, t_steep, candidates, params, t_th=T_TH, k_c=None):
    """First candidate with Delta TG > TG_p and g > g_p; Type I iff t_steep <= t_th."""
    t_inhib = None
    for c in sorted(candidates, key=lambda c: c.time):
        if c.gap > params.tg_p and c.growth > params.g_p:
            t_inhib = c.time
            break
    if t_inhib is None:
        logger.debug("cascade %s has no inhibition interval", cascade_id)
    return EventTimes(
        cascade_id=cascade_id,
        t_steep=t_steep,
        candidates=tuple(candidates),
        t_inhib=t_inhib,
        cascade_type=TYPE_I if t_steep <= t_th else TYPE_OTHER,
        k_c=k_c,
    )


def finalize_corpus(detections, params, t_th=T_TH):
    return [finalize_inhibition(d.cascade_id, d.t_steep, d.candidates, params, t_th, d.k_c)
            for d in detections]


def resolve_thresholds(detections, tg_p=None, g_p=None):
    """
    Configured thresholds win; otherwise calibrate, falling back to the reference
    values. Returns (params, source).
    """
    if tg_p is not None and g_p is not None:
        return ThresholdParams.fixed(tg_p, g_p), "configured"
    source = "calibrated"
    try:
        params = calibrate_thresholds(detections)
    except CalibrationError as err:
        logger.warning("calibration failed (%s); using reference thresholds", err)
        params = ThresholdParams.fixed(REFERENCE_TG_P, REFERENCE_G_P)
        source = "reference"
    if tg_p is not None or g_p is not None:
        params = ThresholdParams(
            tg_p=tg_p if tg_p is not None else params.tg_p,
            g_p=g_p if g_p is not None else params.g_p,
            beta_tg=params.beta_tg, beta_g=params.beta_g,
        )
        source += "+configured"
    return params, source


# ==========================================
# 7. ALPHA SENSITIVITY
# ==========================================
def alpha_sensitivity(cascades, history, alpha_grid=ALPHA_GRID, kernel=None,
                      p=INFECTIOUSNESS, delta_k=DELTA_K):
    """Rerun steps 1-3 for every alpha; one row of (alpha, beta_TG, beta_g) each."""
    if len(alpha_grid) == 0:
        raise ValueError("alpha grid is empty")
    rows = []
    for alpha in alpha_grid:
        corpus = detect_corpus(cascades, history, kernel, p, alpha, delta_k)
        try:
            params = calibrate_thresholds(corpus.detections)
            beta_tg, beta_g = params.beta_tg, params.beta_g
        except CalibrationError as err:
            logger.warning("alpha=%s: %s", alpha, err)
            beta_tg = beta_g = float("nan")
        rows.append({
            "alpha": float(alpha),
            "beta_tg": beta_tg,
            "beta_g": beta_g,
            "n_cascades": len(corpus.detections),
            "n_skipped": len(corpus.skipped),
        })
    return pd.DataFrame(rows, columns=["alpha", "beta_tg", "beta_g", "n_cascades", "n_skipped"])
