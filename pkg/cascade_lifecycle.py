"""
================================================================================
Cascade Lifecycle: Pipeline Driver

Description:
    Runs the cascade lifecycle analysis as independent stages that communicate
    through plain files in the output directory.

        ingest       event log + history graph  -> cascades.csv, history_edges.csv
        detect       steep / inhibition times   -> event_times.json, thresholds.json
        metrics      node measures per window   -> window scores, Jaccard tables
        causality    Granger tests              -> causality_report, causality_summary.json
        forecast     Models 1 and 2             -> forecast_report, forecast_mae
        sensitivity  alpha sweep                -> alpha_sensitivity
        simulate     synthetic corpus           -> synthetic_events.csv, ground_truth.json
        report       run manifest and summary   -> run_manifest.json, summary.txt
        run          ingest .. forecast, then report

Usage:
    python cascade_lifecycle.py simulate --output-dir data --n-cascades 50
    python cascade_lifecycle.py run --event-log data/synthetic_events.csv \
        --history-graph data/synthetic_history.csv --output-dir results

Exit codes: 0 success, 1 configuration / missing artifact, 2 corpus-level failure.
================================================================================
"""

import argparse
import json
import logging
import os
import platform
import sys
from dataclasses import fields
from importlib import metadata

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from causal_forecast import INHIB, STEEP, analyze_cascade, causality_summary, corpus_mae
from cascade_core import (build_subsequences, build_windows, event_window, ingest_cascades,
                          read_history_graph, write_event_log, write_history_graph)
from exceptions import ConfigError, CorpusError, LifecycleError, StageDependencyError
from hawkes_detect import (TYPE_I, EventTimes, ReactionKernel, alpha_sensitivity, detect_cascade,
                           finalize_corpus, reaction_times, resolve_thresholds)
from net_metrics import ALL_MEASURES, Measure, NodeScores, jaccard_matrix, window_scores
from run_config import RunConfig, load_config
from synthgen import MODES, SynthSpec, merge_histories, simulate_corpus

logger = logging.getLogger("cascade_lifecycle")

# ==========================================
# 1. ARTIFACTS
# ==========================================
CASCADES = "cascades.csv"
HISTORY = "history_edges.csv"
INGEST_MANIFEST = "ingest_manifest.json"
EVENT_TIMES = "event_times.json"
THRESHOLDS = "thresholds.json"
METRICS_MANIFEST = "metrics_manifest.json"
SCORES_ALL = "window_scores_all"
EVENT_SCORES = "event_window_scores"
JACCARD = "jaccard.json"
JACCARD_BY_OFFSET = "jaccard_by_offset"
CAUSALITY_REPORT = "causality_report"
CAUSALITY_SUMMARY = "causality_summary.json"
FORECAST_REPORT = "forecast_report"
FORECAST_MAE = "forecast_mae"
CAUSAL_MANIFEST = "causality_manifest.json"
SENSITIVITY = "alpha_sensitivity"
RUN_MANIFEST = "run_manifest.json"
SUMMARY = "summary.txt"
SYNTH_EVENTS = "synthetic_events.csv"
SYNTH_HISTORY = "synthetic_history.csv"
SYNTH_TRUTH = "ground_truth.json"
SYNTH_SERIES = "synthetic_series.csv"

# Parallelism and location only; left out of run_manifest.json
RUN_ONLY_KEYS = ("workers", "output_dir")

PACKAGES = ["numpy", "pandas", "scipy", "networkx", "statsmodels", "PyYAML", "joblib", "tqdm"]


def banner(title):
    print("=" * 60)
    print(f"Cascade Lifecycle: {title}")
    print("=" * 60)


def out_path(cfg, name):
    return os.path.join(cfg.output_dir, name)


def require(cfg, name):
    path = out_path(cfg, name)
    if not os.path.exists(path):
        raise StageDependencyError(path)
    return path


def write_json(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def read_json(path):
    with open(path) as f:
        return json.load(f)


def write_table(df, cfg, stem):
    if cfg.format == "json":
        path = out_path(cfg, stem + ".json")
        df.to_json(path, orient="records", indent=2)
    else:
        path = out_path(cfg, stem + ".csv")
        df.to_csv(path, index=False)
    return path


def read_table(cfg, stem, dtype=None):
    for ext, reader in ((".csv", lambda p: pd.read_csv(p, dtype=dtype)),
                        (".json", lambda p: pd.read_json(p, orient="records", dtype=dtype))):
        path = out_path(cfg, stem + ext)
        if os.path.exists(path):
            return reader(path)
    raise StageDependencyError(out_path(cfg, stem + ".csv"))


def run_parallel(func, items, n_jobs, desc, **kwargs):
    """Ordered map over items with a bounded worker pool."""
    tasks = (delayed(func)(item, **kwargs)
             for item in tqdm(items, desc=desc, file=sys.stderr, disable=None))
    return Parallel(n_jobs=n_jobs)(tasks)


def load_corpus(cfg):
    cascades = ingest_cascades(require(cfg, CASCADES), min_size=1).cascades
    history = read_history_graph(require(cfg, HISTORY))
    return cascades, history


# ==========================================
# 2. INGEST
# ==========================================
def stage_ingest(cfg):
    banner("Ingest")
    if not cfg.event_log:
        raise ConfigError("event_log path is required")
    if not cfg.history_graph:
        raise ConfigError("history_graph path is required")
    for path in (cfg.event_log, cfg.history_graph):
        if not os.path.exists(path):
            raise ConfigError(f"input not found: {path}")

    report = ingest_cascades(cfg.event_log, min_size=cfg.min_size)
    history = read_history_graph(cfg.history_graph)
    if not report.cascades:
        raise CorpusError(f"no cascade with at least {cfg.min_size} reshares in {cfg.event_log}")

    os.makedirs(cfg.output_dir, exist_ok=True)
    write_event_log(report.cascades, out_path(cfg, CASCADES))
    write_history_graph(history, out_path(cfg, HISTORY))
    manifest = {
        "n_cascades": len(report.cascades),
        "n_dropped_small": report.dropped_count,
        "n_rejected_rows": len(report.row_errors),
        "cascades": [{"id": c.id, "size": c.size, "span": c.span} for c in report.cascades],
        "dropped_small": report.dropped_small,
        "rejected_rows": [{"row": e.row, "reason": e.reason} for e in report.row_errors],
        "history": {"nodes": len(history.nodes), "edges": len(history.edges)},
    }
    write_json(manifest, out_path(cfg, INGEST_MANIFEST))

    print(f"\nLoaded {len(report.cascades)} cascades")
    print(f"  - Dropped below {cfg.min_size} reshares: {report.dropped_count}")
    print(f"  - Rejected rows: {len(report.row_errors)}")
    print(f"  - History graph: {len(history.nodes)} nodes, {len(history.edges)} edges")
    return manifest


# ==========================================
# 3. DETECT
# ==========================================
def _detect_one(cascade, history, kernel, cfg):
    try:
        return detect_cascade(cascade, history, kernel, cfg.infectiousness, cfg.alpha, cfg.delta_k)
    except LifecycleError as err:
        logger.warning("cascade %s skipped by detector: %s", cascade.id, err)
        return type(err).__name__


def build_kernel(cfg, cascades):
    if cfg.kernel_kind == "empirical":
        gaps = np.concatenate([reaction_times(c) for c in cascades])
        return ReactionKernel.from_reaction_times(gaps)
    return ReactionKernel(s0=cfg.kernel_s0, theta=cfg.kernel_theta)


def stage_detect(cfg):
    banner("Steep / Inhibition Detection")
    cascades, history = load_corpus(cfg)
    kernel = build_kernel(cfg, cascades)
    outcomes = run_parallel(_detect_one, cascades, cfg.workers, "detect",
                            history=history, kernel=kernel, cfg=cfg)

    detections = [o for o in outcomes if not isinstance(o, str)]
    skipped = {c.id: o for c, o in zip(cascades, outcomes) if isinstance(o, str)}
    if not detections:
        raise CorpusError("detector failed on every cascade")

    params, source = resolve_thresholds(detections, cfg.tg_p, cfg.g_p)
    events = finalize_corpus(detections, params, cfg.t_th)

    write_json({
        "tg_p": params.tg_p, "g_p": params.g_p, "beta_tg": params.beta_tg, "beta_g": params.beta_g,
        "source": source,
    }, out_path(cfg, THRESHOLDS))
    write_json({"cascades": [e.to_record() for e in events], "skipped": skipped},
               out_path(cfg, EVENT_TIMES))

    n_type_i = sum(e.cascade_type == TYPE_I for e in events)
    n_inhib = sum(e.t_inhib is not None for e in events)
    print(f"\nDetected {len(events)} cascades ({len(skipped)} skipped)")
    print(f"  TG_p = {params.tg_p:.2f} min, g_p = {params.g_p:.3f}")
    print(f"  Type I: {n_type_i}, with inhibition interval: {n_inhib}")
    return events


def load_event_times(cfg):
    data = read_json(require(cfg, EVENT_TIMES))
    return {
        r["id"]: EventTimes(cascade_id=r["id"], t_steep=r["t_steep"], candidates=(),
                            t_inhib=r["t_inhib"], cascade_type=r["type"], k_c=r.get("k_c"))
        for r in data["cascades"]
    }


# ==========================================
# 4. METRICS
# ==========================================
def _measure_settings(cfg):
    return {"damping": cfg.damping, "pagerank_tol": cfg.pagerank_tol,
            "max_iter": cfg.max_iter, "alpha_fraction": cfg.alpha_fraction}


def _metrics_one(cascade, history, events, cfg):
    try:
        subs = build_subsequences(cascade, history, cfg.node_count)
        windows = build_windows(subs, history)
        scores = {w.index: window_scores(w, ALL_MEASURES, **_measure_settings(cfg)) for w in windows}
    except (LifecycleError, np.linalg.LinAlgError, ValueError) as err:
        logger.warning("cascade %s skipped by metrics: %s", cascade.id, err)
        return {"skip": type(err).__name__}

    all_rows, event_rows, jaccard, offset_rows = [], [], {}, []
    for w in windows:
        for m in ALL_MEASURES:
            values = scores[w.index][m].scores
            for node in sorted(values):
                all_rows.append((cascade.id, w.index, m.value, node, values[node], w.terminal))
        if not w.terminal:
            jaccard[str(w.index)] = jaccard_matrix(scores[w.index], cfg.top_k)

    for event, t_e in ((STEEP, events.t_steep), (INHIB, events.t_inhib)):
        if t_e is None:
            continue
        target = event_window(windows, subs, t_e)
        if target is None:
            continue
        preceding = [w for w in windows if w.index < target.index and not w.terminal]
        preceding = preceding[-cfg.report_windows:]
        for offset, w in zip(range(-len(preceding), 0), preceding):
            for m in ALL_MEASURES:
                values = scores[w.index][m].scores
                for node in sorted(values):
                    event_rows.append((cascade.id, event, offset, w.index, m.value, node, values[node]))
            for pair, value in jaccard[str(w.index)].items():
                offset_rows.append((cascade.id, event, offset, pair, value))
    return {"all": all_rows, "event": event_rows, "jaccard": jaccard, "offsets": offset_rows,
            "windows": len(windows)}


def stage_metrics(cfg):
    banner("Node Measures on Temporal Windows")
    cascades, history = load_corpus(cfg)
    event_times = load_event_times(cfg)
    cascades = [c for c in cascades if c.id in event_times]
    outcomes = run_parallel(_metrics_task, [(c, event_times[c.id]) for c in cascades], cfg.workers, "metrics",
                            history=history, cfg=cfg)

    all_rows, event_rows, offset_rows, jaccard, skipped = [], [], [], {}, {}
    n_windows = 0
    for c, outcome in zip(cascades, outcomes):
        if "skip" in outcome:
            skipped[c.id] = outcome["skip"]
            continue
        all_rows += outcome["all"]
        event_rows += outcome["event"]
        offset_rows += outcome["offsets"]
        jaccard[c.id] = outcome["jaccard"]
        n_windows += outcome["windows"]

    write_table(pd.DataFrame(all_rows, columns=["cascade_id", "window_index", "measure", "node_id",
                                                "score", "terminal"]), cfg, SCORES_ALL)
    write_table(pd.DataFrame(event_rows, columns=["cascade_id", "event", "offset", "window_index",
                                                  "measure", "node_id", "score"]), cfg, EVENT_SCORES)
    write_json(jaccard, out_path(cfg, JACCARD))
    offsets = pd.DataFrame(offset_rows, columns=["cascade_id", "event", "offset", "pair", "jaccard"])
    mean_offsets = (offsets.groupby(["event", "offset", "pair"], sort=True)["jaccard"]
                    .agg(mean_jaccard="mean", n="size").reset_index())
    write_table(mean_offsets, cfg, JACCARD_BY_OFFSET)
    write_json({"n_cascades": len(cascades) - len(skipped), "n_windows": n_windows, "skipped": skipped},
               out_path(cfg, METRICS_MANIFEST))

    print(f"\nScored {n_windows} windows over {len(cascades) - len(skipped)} cascades")
    print(f"  - Skipped: {len(skipped)}")
    return n_windows


def _metrics_task(item, history, cfg):
    cascade, events = item
    return _metrics_one(cascade, history, events, cfg)


# ==========================================
# 5. CAUSALITY AND FORECAST
# ==========================================
def _scores_by_window(frame):
    scores = {}
    for (index, measure), rows in frame.groupby(["window_index", "measure"], sort=True):
        m = Measure(measure)
        scores.setdefault(int(index), {})[m] = NodeScores(
            int(index), m, dict(zip(rows["node_id"], rows["score"].astype(float))))
    return scores


def _causal_task(item, history, cfg):
    cascade, events, frame = item
    try:
        subs = build_subsequences(cascade, history, cfg.node_count)
        windows = build_windows(subs, history)
        scores = _scores_by_window(frame)
        windows = [w for w in windows if w.index in scores]
        return analyze_cascade(cascade, windows, scores, events, ALL_MEASURES, cfg.max_lag, cfg.significance)
    except (LifecycleError, np.linalg.LinAlgError, ValueError) as err:
        logger.warning("cascade %s skipped by causality: %s", cascade.id, err)
        return [], [], [("", False, "", type(err).__name__)]


def stage_causal(cfg, write_causality=True, write_forecast=True):
    banner("Granger Causality and Forecasting")
    cascades, history = load_corpus(cfg)
    event_times = load_event_times(cfg)
    frame = read_table(cfg, SCORES_ALL, dtype={"cascade_id": str, "node_id": str, "measure": str})
    by_cascade = {cid: rows for cid, rows in frame.groupby("cascade_id", sort=True)}

    items = [(c, event_times[c.id], by_cascade[c.id]) for c in cascades
             if c.id in event_times and event_times[c.id].cascade_type == TYPE_I and c.id in by_cascade]
    outcomes = run_parallel(_causal_task, items, cfg.workers, "causality", history=history, cfg=cfg)

    causality, forecasts, skip_rows = [], [], []
    for (c, _, _), (rows, results, skips) in zip(items, outcomes):
        causality += rows
        forecasts += results
        skip_rows += [{"cascade_id": c.id, "event": e, "clipped": cl, "measure": m, "reason": r}
                      for e, cl, m, r in skips]

    summary = causality_summary(causality)
    if write_causality:
        report = pd.DataFrame(causality, columns=["cascade_id", "measure", "event", "clipped",
                                                  "p_order", "f_stat", "p_value", "causal"])
        write_table(report, cfg, CAUSALITY_REPORT)
        write_json({"significance": cfg.significance, "measures": summary},
                   out_path(cfg, CAUSALITY_SUMMARY))
    if write_forecast:
        report = pd.DataFrame([{
            "cascade_id": r.cascade_id, "model": r.model, "event": r.event, "measure": r.measure,
            "clipped": r.clipped, "predicted": r.predicted, "actual": r.actual, "abs_error": r.abs_error,
        } for r in forecasts], columns=["cascade_id", "model", "event", "measure", "clipped",
                                        "predicted", "actual", "abs_error"])
        write_table(report, cfg, FORECAST_REPORT)
        write_table(corpus_mae(forecasts), cfg, FORECAST_MAE)
    write_json({"n_type_i": len(items), "n_tests": len(causality), "n_forecasts": len(forecasts),
                "skips": skip_rows}, out_path(cfg, CAUSAL_MANIFEST))

    print(f"\nTested {len(items)} Type I cascades: {len(causality)} Granger tests, "
          f"{len(forecasts)} forecasts, {len(skip_rows)} skipped series")
    for row in summary:
        variant = f"{row['event']}{' (clipped)' if row['clipped'] else ''}"
        print(f"  {row['measure']:<17} {variant:<16} causal {row['pct_causal']:6.2f}%  "
              f"mean p {row['mean_p_value']:.4f}")
    return summary


# ==========================================
# 6. SENSITIVITY / SIMULATE
# ==========================================
def stage_sensitivity(cfg):
    banner("Alpha Sensitivity")
    cascades, history = load_corpus(cfg)
    kernel = build_kernel(cfg, cascades)
    table = alpha_sensitivity(cascades, history, cfg.alpha_grid, kernel, cfg.infectiousness, cfg.delta_k)
    write_table(table, cfg, SENSITIVITY)
    print(table.to_string(index=False))
    return table


def stage_simulate(cfg, n_cascades, mode, n_events, t_steep, t_inhib):
    banner("Synthetic Corpus")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    spec = SynthSpec(seed=cfg.seed, mode=mode, n_events=n_events, node_budget=2 * n_events,
                     kernel_s0=cfg.kernel_s0, kernel_theta=cfg.kernel_theta,
                     t_steep=t_steep, t_inhib=t_inhib)
    try:
        results = simulate_corpus(n_cascades, spec)
    except LifecycleError as err:
        raise ConfigError(str(err)) from None

    os.makedirs(cfg.output_dir, exist_ok=True)
    if mode == "var-coupled":
        frames = [r.series.assign(series_id=r.truth["id"], t=np.arange(len(r.series))) for r in results]
        pd.concat(frames)[["series_id", "t", "x", "y"]].to_csv(out_path(cfg, SYNTH_SERIES), index=False)
    else:
        write_event_log([r.cascade for r in results], out_path(cfg, SYNTH_EVENTS))
        write_history_graph(merge_histories(results), out_path(cfg, SYNTH_HISTORY))
    write_json([r.truth for r in results], out_path(cfg, SYNTH_TRUTH))
    print(f"\nWrote {len(results)} {mode} samples to {cfg.output_dir}")
    return results


# ==========================================
# 7. REPORT
# ==========================================
def package_versions():
    versions = {"python": platform.python_version()}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def _quantiles(values):
    s = pd.Series(values, dtype=float)
    return {q: float(s.quantile(v)) for q, v in (("min", 0.0), ("median", 0.5), ("p90", 0.9), ("max", 1.0))}


def _optional(cfg, name):
    path = out_path(cfg, name)
    return read_json(path) if os.path.exists(path) else None


def stage_report(cfg):
    banner("Report")
    ingest = read_json(require(cfg, INGEST_MANIFEST))
    events = _optional(cfg, EVENT_TIMES)
    thresholds = _optional(cfg, THRESHOLDS)
    metrics = _optional(cfg, METRICS_MANIFEST)
    causal = _optional(cfg, CAUSAL_MANIFEST)
    causal_summary = _optional(cfg, CAUSALITY_SUMMARY)

    records = events["cascades"] if events else []
    corpus = {
        "n_cascades": ingest["n_cascades"],
        "size": _quantiles([c["size"] for c in ingest["cascades"]]),
        "span_minutes": _quantiles([c["span"] for c in ingest["cascades"]]),
        "n_detected": len(records),
        "n_type_i": sum(r["type"] == TYPE_I for r in records),
        "n_with_inhibition": sum(r["t_inhib"] is not None for r in records),
    }
    counts = {
        "ingest": {k: ingest[k] for k in ("n_cascades", "n_dropped_small", "n_rejected_rows")},
        "detect": {"n_detected": len(records), "skipped": events["skipped"] if events else {}},
        "metrics": metrics,
        "causality": {k: causal[k] for k in ("n_type_i", "n_tests", "n_forecasts")} if causal else None,
    }
    skip_reasons = {}
    for reason in list(counts["detect"]["skipped"].values()) + \
            list((metrics or {}).get("skipped", {}).values()) + \
            [s["reason"] for s in (causal or {}).get("skips", [])]:
        skip_reasons[reason] = skip_reasons.get(reason, 0) + 1

    manifest = {
        "config": {k: v for k, v in cfg.to_dict().items() if k not in RUN_ONLY_KEYS},
        "versions": package_versions(),
        "corpus": corpus,
        "thresholds": thresholds,
        "counts": counts,
        "skip_reasons": dict(sorted(skip_reasons.items())),
    }
    write_json(manifest, out_path(cfg, RUN_MANIFEST))
    save_summary(cfg, corpus, thresholds, causal_summary, skip_reasons)
    print(f"\nCascades: {corpus['n_cascades']}  Type I: {corpus['n_type_i']}  "
          f"with inhibition: {corpus['n_with_inhibition']}")
    return manifest


def save_summary(cfg, corpus, thresholds, causal_summary, skip_reasons):
    """Human-readable summary of the run."""
    with open(out_path(cfg, SUMMARY), "w") as f:
        f.write("=" * 70 + "\n")
        f.write("CASCADE LIFECYCLE ANALYSIS - RUN SUMMARY\n")
        f.write("=" * 70 + "\n\n")

        f.write("1. CORPUS\n")
        f.write("-" * 40 + "\n")
        f.write(f"   Cascades:            {corpus['n_cascades']}\n")
        f.write(f"   Median size:         {corpus['size']['median']:.1f} reshares\n")
        f.write(f"   Median lifetime:     {corpus['span_minutes']['median']:.1f} min\n")
        f.write(f"   Type I:              {corpus['n_type_i']} / {corpus['n_detected']}\n")
        f.write(f"   With inhibition:     {corpus['n_with_inhibition']}\n\n")

        f.write("2. THRESHOLDS\n")
        f.write("-" * 40 + "\n")
        if thresholds:
            f.write(f"   TG_p:  {thresholds['tg_p']:.4f} min ({thresholds['source']})\n")
            f.write(f"   g_p:   {thresholds['g_p']:.4f}\n\n")
        else:
            f.write("   (detect stage not run)\n\n")

        f.write("3. GRANGER CAUSALITY (feature -> response time)\n")
        f.write("-" * 40 + "\n")
        if causal_summary and causal_summary["measures"]:
            for row in causal_summary["measures"]:
                variant = row["event"] + (" clipped" if row["clipped"] else "")
                f.write(f"   {row['measure']:<17} {variant:<14} {row['pct_causal']:6.2f}% causal, "
                        f"mean p = {row['mean_p_value']:.4f} (n = {row['n_tests']})\n")
        else:
            f.write("   (no tests)\n")
        f.write("\n")

        f.write("4. SKIPS\n")
        f.write("-" * 40 + "\n")
        for reason, n in sorted(skip_reasons.items()):
            f.write(f"   {reason:<28} {n}\n")
        if not skip_reasons:
            f.write("   none\n")


# ==========================================
# 8. COMMAND LINE
# ==========================================
def _flag_type(default):
    if isinstance(default, bool):
        return None
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    return str


def build_parser():
    parser = argparse.ArgumentParser(description="Cascade lifecycle analysis")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--log-level", default="INFO")
    defaults = RunConfig()
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        default = getattr(defaults, f.name)
        if isinstance(default, list):
            common.add_argument(flag, dest=f.name, nargs="+", type=float, default=None)
        elif f.name in ("tg_p", "g_p"):
            common.add_argument(flag, dest=f.name, type=float, default=None)
        else:
            common.add_argument(flag, dest=f.name, type=_flag_type(default), default=None)

    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ingest", "detect", "metrics", "causality", "forecast", "sensitivity", "report", "run"):
        sub.add_parser(name, parents=[common])
    sim = sub.add_parser("simulate", parents=[common])
    sim.add_argument("--n-cascades", type=int, default=50)
    sim.add_argument("--mode", default="planted-logistic", choices=MODES)
    sim.add_argument("--n-events", type=int, default=400)
    sim.add_argument("--t-steep", type=float, default=200.0)
    sim.add_argument("--t-inhib", type=float, default=900.0)
    return parser


def run_pipeline(cfg):
    stage_ingest(cfg)
    stage_detect(cfg)
    stage_metrics(cfg)
    stage_causal(cfg)
    return stage_report(cfg)


def dispatch(args, cfg):
    command = args.command
    if command == "ingest":
        stage_ingest(cfg)
    elif command == "detect":
        stage_detect(cfg)
    elif command == "metrics":
        stage_metrics(cfg)
    elif command == "causality":
        stage_causal(cfg, write_causality=True, write_forecast=False)
    elif command == "forecast":
        stage_causal(cfg, write_causality=False, write_forecast=True)
    elif command == "sensitivity":
        stage_sensitivity(cfg)
    elif command == "simulate":
        stage_simulate(cfg, args.n_cascades, args.mode, args.n_events, args.t_steep, args.t_inhib)
    elif command == "report":
        stage_report(cfg)
    elif command == "run":
        run_pipeline(cfg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)}
    try:
        cfg = load_config(args.config, overrides)
        dispatch(args, cfg)
    except (ConfigError, StageDependencyError) as err:
        logger.error("%s", err)
        return 1
    except LifecycleError as err:
        logger.error("corpus-level failure: %s", err)
        return 2

    print("\n" + "=" * 60)
    print("Analysis complete!")
    print("=" * 60)
    return 0


if __name__ == "__main__":
    sys.exit(main())
