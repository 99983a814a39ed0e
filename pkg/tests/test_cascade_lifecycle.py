import json
import os

import pandas as pd
import pytest

import cascade_lifecycle
from cascade_lifecycle import _causal_task, main, run_parallel
from net_metrics import ALL_MEASURES
from run_config import RunConfig
from synthgen import SynthSpec, generate

ARTIFACTS = ["event_times.json", "thresholds.json", "event_window_scores.csv", "jaccard.json",
             "causality_report.csv", "causality_summary.json", "forecast_mae.csv", "run_manifest.json",
             "summary.txt"]


def simulate(out, n):
    assert main(["simulate", "--output-dir", str(out), "--n-cascades", str(n), "--log-level", "WARNING"]) == 0
    return str(out / "synthetic_events.csv"), str(out / "synthetic_history.csv")


def snapshot(directory, skip=()):
    return {name: (directory / name).read_bytes() for name in sorted(os.listdir(directory)) if name not in skip}


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return simulate(tmp_path_factory.mktemp("synthetic"), 50)


@pytest.fixture(scope="module")
def pipeline(corpus, tmp_path_factory):
    events, history = corpus
    out = tmp_path_factory.mktemp("run")
    code = main(["run", "--event-log", events, "--history-graph", history, "--output-dir", str(out),
                 "--log-level", "WARNING"])
    return code, out


def test_pipeline_writes_every_artifact(pipeline):
    code, out = pipeline
    assert code == 0
    for name in ARTIFACTS:
        assert (out / name).exists(), name


def test_manifest_counts_match_input(pipeline, corpus):
    _, out = pipeline
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["corpus"]["n_cascades"] == 50
    assert manifest["counts"]["ingest"]["n_rejected_rows"] == 0
    assert manifest["config"]["alpha"] == 5.0
    assert "workers" not in manifest["config"] and "output_dir" not in manifest["config"]
    with open(os.path.join(os.path.dirname(corpus[0]), "ground_truth.json")) as f:
        truth = json.load(f)
    assert [t["id"] for t in truth] == [c["id"] for c in
                                         json.loads((out / "ingest_manifest.json").read_text())["cascades"]]


def test_report_rows_trace_to_ingested_cascades(pipeline):
    _, out = pipeline
    ingested = {c["id"] for c in json.loads((out / "ingest_manifest.json").read_text())["cascades"]}
    times = json.loads((out / "event_times.json").read_text())
    assert {r["id"] for r in times["cascades"]} | set(times["skipped"]) == ingested
    report = pd.read_csv(out / "causality_report.csv", dtype={"cascade_id": str})
    assert set(report["cascade_id"]) <= ingested
    scores = pd.read_csv(out / "event_window_scores.csv", dtype={"cascade_id": str})
    assert set(scores["cascade_id"]) <= ingested
    assert scores["offset"].between(-20, -1).all()


def test_causality_and_forecast_tables(pipeline):
    _, out = pipeline
    summary = json.loads((out / "causality_summary.json").read_text())
    names = {m.value for m in ALL_MEASURES}
    assert summary["measures"]
    assert {row["measure"] for row in summary["measures"]} <= names
    assert all(0.0 <= row["pct_causal"] <= 100.0 for row in summary["measures"])
    mae = pd.read_csv(out / "forecast_mae.csv")
    assert set(mae["model"]) <= {"M1", "M2"}
    assert (mae["mae"] >= 0).all()


def test_rerun_is_byte_identical(pipeline, corpus):
    _, out = pipeline
    before = snapshot(out)
    events, history = corpus
    assert main(["run", "--event-log", events, "--history-graph", history, "--output-dir", str(out),
                 "--log-level", "WARNING"]) == 0
    assert snapshot(out) == before


def test_output_independent_of_worker_count(pipeline, corpus, tmp_path):
    _, out = pipeline
    events, history = corpus
    assert main(["run", "--event-log", events, "--history-graph", history, "--output-dir", str(tmp_path),
                 "--workers", "2", "--log-level", "WARNING"]) == 0
    assert snapshot(tmp_path) == snapshot(out)


def test_missing_history_graph_is_config_error(corpus, tmp_path):
    events, _ = corpus
    code = main(["run", "--event-log", events, "--history-graph", str(tmp_path / "absent.csv"),
                 "--output-dir", str(tmp_path / "out")])
    assert code == 1


def test_stage_needs_previous_artifacts(tmp_path):
    assert main(["report", "--output-dir", str(tmp_path)]) == 1
    assert main(["detect", "--output-dir", str(tmp_path)]) == 1


def test_empty_corpus_is_corpus_failure(corpus, tmp_path):
    events, history = corpus
    code = main(["ingest", "--event-log", events, "--history-graph", history,
                 "--output-dir", str(tmp_path), "--min-size", "100000"])
    assert code == 2


def test_sensitivity_default_grid(tmp_path):
    events, history = simulate(tmp_path / "data", 6)
    out = tmp_path / "out"
    assert main(["ingest", "--event-log", events, "--history-graph", history, "--output-dir", str(out)]) == 0
    assert main(["sensitivity", "--output-dir", str(out), "--format", "json"]) == 0
    table = pd.read_json(out / "alpha_sensitivity.json", orient="records")
    assert list(table["alpha"]) == [1.0, 3.0, 5.0, 7.0, 10.0, 15.0]
    assert (table["n_cascades"] + table["n_skipped"] == 6).all()


def test_simulate_rejects_infeasible_plant(tmp_path):
    code = main(["simulate", "--output-dir", str(tmp_path), "--t-steep", "900", "--t-inhib", "200"])
    assert code == 1


def _scaled(item, factor, cfg):
    return item * factor + cfg.node_count


def test_run_parallel_forwards_task_config():
    cfg = RunConfig(node_count=7)
    assert run_parallel(_scaled, [1, 2, 3], 1, "test", factor=10, cfg=cfg) == [17, 27, 37]


def test_causal_task_failure_becomes_skip(monkeypatch, caplog):
    result = generate(SynthSpec(seed=0, n_events=120))
    frame = pd.DataFrame(columns=["cascade_id", "window_index", "measure", "node_id", "score"])

    def broken(*args, **kwargs):
        raise ValueError("singular design")

    monkeypatch.setattr(cascade_lifecycle, "analyze_cascade", broken)
    with caplog.at_level("WARNING"):
        rows, forecasts, skips = _causal_task((result.cascade, None, frame), result.history, RunConfig())
    assert rows == [] and forecasts == []
    assert skips == [("", False, "", "ValueError")]
    assert "skipped by causality" in caplog.text
