"""
Cascade Lifecycle: Granger Causality and Event-Time Forecasting
Relates node measures to reshare response times around a lifecycle event.

    feature series  T_f[t]  mean measure of the sources resharing at t
    response series R[t]    t - previous reshare time
    test            does the feature Granger-cause the response?
                    (bivariate VAR, AIC lag choice, Wald F-test)
    forecast        Model 1: R[t] on lags of T_f
                    Model 2: R[t] on lags of R and T_f (full Granger regression)

Events are 'steep' and 'inhib'; the clipped inhib variant restricts the series
to [t_steep, t_inhib]. Only the feature -> response direction is tested.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from statsmodels.tsa.stattools import adfuller

from exceptions import (CollinearityError, DegenerateSeriesError, LifecycleError,
                        SeriesTooShortError)
from stats_num import f_sf, ols

logger = logging.getLogger(__name__)

# ==========================================
# 1. SETTINGS
# ==========================================
MAX_LAG = 5                 # P
SIGNIFICANCE = 0.05
ADF_MAX_LAG = 3
ADF_CRITICAL = -2.86        # 5% critical value, constant and no trend
ADF_MIN_LENGTH = 10

STEEP = "steep"
INHIB = "inhib"
MODEL_1 = "M1"
MODEL_2 = "M2"
# (event, clipped) combinations analysed per measure
VARIANTS = ((STEEP, False), (INHIB, False), (INHIB, True))


# ==========================================
# 2. SERIES
# ==========================================
@dataclass(frozen=True)
class FeatureSeries:
    measure: str
    event: str
    values: pd.Series           # indexed by reshare time (minutes)
    clipped: bool = False
    missing_sources: int = 0


@dataclass(frozen=True)
class ResponseSeries:
    event: str
    values: pd.Series
    clipped: bool = False


def response_gaps(times):
    """R[t] = t - previous distinct reshare time, for every distinct time but the first."""
    distinct = np.unique(np.asarray(times, dtype=float))
    return pd.Series(np.diff(distinct), index=distinct[1:])


def build_series(cascade, windows, scores, measure, event, t_event, t_steep=None, clipped=False):
    """
    Feature and response series for one (measure, event) pair.

    `scores` maps window index -> {measure: NodeScores}. For each window the
    reshares of its first subsequence are scored on that window's graph; tied
    times are averaged. Both series stop at `t_event` and are intersected on time.
    """
    if t_event is None:
        raise ValueError(f"cascade {cascade.id} has no {event} time")
    if clipped and t_steep is None:
        raise ValueError("clipped series need t_steep")

    times, values = [], []
    missing = 0
    for w in windows:
        node_scores = scores[w.index][measure].scores
        for e in w.first_events:
            if e.time > t_event:
                continue
            if e.source not in node_scores:
                missing += 1
            times.append(e.time)
            values.append(node_scores.get(e.source, 0.0))
    if missing:
        logger.info("cascade %s: %d reshare sources missing from %s scores, counted as 0",
                    cascade.id, missing, measure)

    feature = pd.Series(values, index=times, dtype=float).groupby(level=0).mean().sort_index()
    response = response_gaps(cascade.times)
    response = response[response.index <= t_event]
    if clipped:
        feature = feature[(feature.index >= t_steep) & (feature.index <= t_event)]
        response = response[response.index >= t_steep]

    common = feature.index.intersection(response.index)
    return (
        FeatureSeries(str(measure), event, feature.loc[common], clipped, missing),
        ResponseSeries(event, response.loc[common], clipped),
    )


# ==========================================
# 3. STATIONARITY
# ==========================================
@dataclass(frozen=True)
class AdfResult:
    statistic: float
    used_lag: int
    stationary: bool


def adf_test(values, critical=ADF_CRITICAL):
    """Augmented Dickey-Fuller with a constant, lag order <= 3 chosen by AIC."""
    x = np.asarray(values, dtype=float)
    if x.size < ADF_MIN_LENGTH:
        raise SeriesTooShortError(f"ADF needs {ADF_MIN_LENGTH} points, got {x.size}")
    if np.ptp(x) == 0:
        raise DegenerateSeriesError("constant series")
    stat, _, used_lag, *_ = adfuller(x, maxlag=ADF_MAX_LAG, regression="c", autolag="AIC")
    return AdfResult(float(stat), int(used_lag), bool(stat < critical))


def make_stationary(x, y):
    """Difference whichever series fails the ADF test and realign the pair."""
    x = pd.Series(np.asarray(x, dtype=float))
    y = pd.Series(np.asarray(y, dtype=float))
    if not adf_test(x).stationary:
        x = x.diff()
    if not adf_test(y).stationary:
        y = y.diff()
    pair = pd.concat([x, y], axis=1).dropna()
    return pair.iloc[:, 0].to_numpy(), pair.iloc[:, 1].to_numpy()


# ==========================================
# 4. VAR MACHINERY
# ==========================================
def lag_matrix(values, p, start):
    """Columns value[t-1], ..., value[t-p] for t = start .. len-1."""
    v = np.asarray(values, dtype=float)
    return np.column_stack([v[start - k:len(v) - k] for k in range(1, p + 1)])


def _design(parts, n):
    return np.column_stack([np.ones(n)] + parts)


@dataclass(frozen=True)
class VarFit:
    order: int
    coefficients: np.ndarray        # rows: const, x lags, y lags; columns: x and y equations
    residual_variance: float
    aic: float


def fit_var(x, y, p, start=None):
    """Bivariate VAR(p) by equation-wise least squares over t >= start (default p)."""
    start = p if start is None else start
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x) - start
    X = _design([lag_matrix(x, p, start), lag_matrix(y, p, start)], n)
    fx = ols(X, x[start:])
    fy = ols(X, y[start:])
    resid = np.column_stack([fx.residuals, fy.residuals])
    sigma = resid.T @ resid / n
    sign, logdet = np.linalg.slogdet(sigma)
    aic = logdet + 2.0 * 2 * (1 + 2 * p) / n if sign > 0 else -np.inf
    return VarFit(p, np.column_stack([fx.coefficients, fy.coefficients]),
                  float(np.trace(sigma) / 2), float(aic))


def select_order(x, y, max_lag=MAX_LAG):
    """AIC-minimizing lag order on the common sample t >= P; smallest p on ties."""
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if len(x) != len(y):
        raise ValueError("series are not aligned")
    if len(x) < 3 * (max_lag + 1):
        raise SeriesTooShortError(f"order selection needs {3 * (max_lag + 1)} points, got {len(x)}")
    best_p, best_aic = 1, np.inf
    for p in range(1, max_lag + 1):
        aic = fit_var(x, y, p, start=max_lag).aic
        if aic < best_aic:
            best_p, best_aic = p, aic
    return best_p


# ==========================================
# 5. GRANGER TEST
# ==========================================
@dataclass(frozen=True)
class GrangerResult:
    p_order: int
    rss_restricted: float
    rss_full: float
    f_stat: float
    p_value: float
    causal: bool
    perfect_fit: bool = False


def granger_test(x, y, p, significance=SIGNIFICANCE):
    """
    H0: lags of y do not help predict x.

    Restricted: x_t on const + p lags of x.  Full: adds p lags of y.
    F = ((RSS_r - RSS_f) / p) / (RSS_f / (T - 2p - 1)) with T regression rows.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("series are not aligned")
    if len(x) < 2 * p + 5:
        raise SeriesTooShortError(f"Granger test with p={p} needs {2 * p + 5} points, got {len(x)}")

    n = len(x) - p
    target = x[p:]
    x_lags = lag_matrix(x, p, p)
    restricted = ols(_design([x_lags], n), target)
    full = ols(_design([x_lags, lag_matrix(y, p, p)], n), target)

    df2 = n - 2 * p - 1
    if full.rss <= 1e-20 * max(1.0, float(target @ target)):
        return GrangerResult(p, restricted.rss, full.rss, np.inf, 0.0, True, perfect_fit=True)
    f_stat = max(0.0, ((restricted.rss - full.rss) / p) / (full.rss / df2))
    p_value = f_sf(f_stat, p, df2)
    return GrangerResult(p, restricted.rss, full.rss, f_stat, p_value, p_value < significance)


# ==========================================
# 6. FORECASTING
# ==========================================
@dataclass(frozen=True)
class ForecastResult:
    model: str
    event: str
    clipped: bool
    predicted: float
    actual: float
    measure: str = ""
    cascade_id: str = ""

    @property
    def abs_error(self):
        return abs(self.predicted - self.actual)


def forecast_event(x, y, model, p, event=STEEP, clipped=False, measure="", cascade_id=""):
    """
    Predict the last response value (the gap ending at the event).

    Training uses every point except the final p + 1; the last point is then
    predicted from its p lags.
    """
    if model not in (MODEL_1, MODEL_2):
        raise ValueError(f"unknown model {model!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    T = len(x)
    if T < 2 * (p + 1):
        raise SeriesTooShortError(f"forecast with p={p} needs {2 * (p + 1)} points, got {T}")

    def regressors(xs, ys, start):
        parts = [lag_matrix(ys, p, start)]
        if model == MODEL_2:
            parts.insert(0, lag_matrix(xs, p, start))
        return parts

    train_x, train_y = x[:T - p - 1], y[:T - p - 1]
    rows = len(train_x) - p
    n_params = 1 + p * (2 if model == MODEL_2 else 1)
    if rows <= n_params:
        raise SeriesTooShortError(f"{rows} training rows for {n_params} coefficients")
    fit = ols(_design(regressors(train_x, train_y, p), rows), train_x[p:])

    last = _design(regressors(x, y, T - 1), 1)
    predicted = float(fit.predict(last)[0])
    return ForecastResult(model, event, clipped, predicted, float(x[-1]), str(measure), cascade_id)


def corpus_mae(results):
    """MAE per (model, event, measure, clipped); groups without results are absent."""
    columns = ["model", "event", "measure", "clipped", "mae", "n"]
    if not results:
        return pd.DataFrame(columns=columns)
    df = pd.DataFrame({
        "model": [r.model for r in results],
        "event": [r.event for r in results],
        "measure": [r.measure for r in results],
        "clipped": [r.clipped for r in results],
        "abs_error": [r.abs_error for r in results],
    })
    grouped = df.groupby(["model", "event", "measure", "clipped"], sort=True)["abs_error"]
    out = grouped.agg(mae=lambda s: math.fsum(s) / len(s), n="size").reset_index()
    return out[columns]


# ==========================================
# 7. PER-CASCADE DRIVER
# ==========================================
def event_time(event_times, event):
    return event_times.t_steep if event == STEEP else event_times.t_inhib


def analyze_cascade(cascade, windows, scores, event_times, measures,
                    max_lag=MAX_LAG, significance=SIGNIFICANCE):
    """
    Causality rows, forecasts and skip reasons for every measure and event variant
    of one cascade.
    """
    causality, forecasts, skips = [], [], []
    for event, clipped in VARIANTS:
        t_e = event_time(event_times, event)
        if t_e is None:
            skips.append((event, clipped, "", "NoEventTime"))
            continue
        for measure in measures:
            name = getattr(measure, "value", str(measure))
            feature, response = build_series(cascade, windows, scores, measure, event, t_e,
                                             event_times.t_steep, clipped)
            x, y = response.values.to_numpy(), feature.values.to_numpy()
            try:
                xs, ys = make_stationary(x, y)
                p = select_order(xs, ys, max_lag)
                result = granger_test(xs, ys, p, significance)
            except (LifecycleError, np.linalg.LinAlgError) as err:
                skips.append((event, clipped, name, type(err).__name__))
                continue
            causality.append({
                "cascade_id": cascade.id, "measure": name, "event": event, "clipped": clipped,
                "p_order": p, "f_stat": result.f_stat, "p_value": result.p_value,
                "causal": result.causal,
            })
            for model in (MODEL_1, MODEL_2):
                try:
                    forecasts.append(forecast_event(x, y, model, p, event, clipped, name, cascade.id))
                except (SeriesTooShortError, CollinearityError) as err:
                    skips.append((event, clipped, name, f"{model}:{type(err).__name__}"))
    return causality, forecasts, skips


def causality_summary(rows):
    """Percent causal and mean p-value per measure and event variant."""
    df = pd.DataFrame(rows, columns=["cascade_id", "measure", "event", "clipped",
                                     "p_order", "f_stat", "p_value", "causal"])
    if df.empty:
        return []
    grouped = df.groupby(["measure", "event", "clipped"], sort=True)
    out = grouped.agg(n_tests=("causal", "size"),
                      pct_causal=("causal", lambda s: 100.0 * s.sum() / len(s)),
                      mean_p_value=("p_value", "mean")).reset_index()
    return out.to_dict(orient="records")
